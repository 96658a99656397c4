#pragma once

// Randomized accelerations of the PGD solver.
//
// Two orthogonal tricks:
//   * rank sketching ("rma"): replace D by its projection D~ = Q Q^T D onto
//     the range of D*Omega for a Gaussian Omega with k columns; gradients
//     then cost O(nk) per iteration through the factor W = Q^T D.
//   * dimension reduction ("rdr"): replace (x, D) by (Tx, TD) for an
//     m x d Johnson-Lindenstrauss map T; one O(mdn) setup buys O(mn)
//     iterations.
// Both reduced problems are solved by the same threshold-descent loop as
// plain PGD, with the same shrinkage/decrease assertions on the reduced
// objective.

#include <cmath>
#include <cstdint>
#include <string>
#include <utility>

#include "l0prox/core.hpp"
#include "l0prox/errors.hpp"
#include "l0prox/pgd.hpp"
#include "l0prox/rng.hpp"
#include "l0prox/types.hpp"

namespace l0prox {

// ============================================================================
// Random draws
// ============================================================================

/// n x k matrix with i.i.d. standard normal entries, filled column-major
/// from the sketch stream of `seed`.
inline Matrix sample_gaussian_sketch(Index n, Index k, std::uint64_t seed) {
  if (n < 1 || k < 1) {
    throw ConfigError("sample_gaussian_sketch: dimensions must be positive");
  }
  CounterRng rng(seed, streams::sketch);
  Matrix omega(n, k);
  for (Index j = 0; j < k; ++j) {
    for (Index i = 0; i < n; ++i) omega(i, j) = rng.gaussian();
  }
  return omega;
}

enum class JlDistribution {
  Gaussian,          // N(0,1) entries
  Sign,              // +-1 uniform
  DatabaseFriendly,  // +-sqrt(3) w.p. 1/6 each, 0 w.p. 2/3
  Identity,          // test-only bypass: m must equal d, T = I
};

inline const char* to_string(JlDistribution d) {
  switch (d) {
    case JlDistribution::Gaussian: return "gaussian";
    case JlDistribution::Sign: return "sign";
    case JlDistribution::DatabaseFriendly: return "database_friendly";
    case JlDistribution::Identity: return "identity";
  }
  return "unknown";
}

struct JlTransform {
  Matrix t;  // m x d, already scaled by 1/sqrt(m)
  JlDistribution distribution = JlDistribution::Gaussian;
  std::uint64_t seed = 0;
  Index reduced_dim = 0;
};

/// m x d Johnson-Lindenstrauss map: unscaled i.i.d. entries from the
/// chosen distribution, divided by sqrt(m).  The Identity distribution is
/// a test-only bypass (requires m == d) that turns the reduction into the
/// identity so reduced solves can be compared bit-for-bit with plain ones.
inline JlTransform sample_jl(Index m, Index d, JlDistribution dist,
                             std::uint64_t seed) {
  if (m < 1 || d < 1) {
    throw ConfigError("sample_jl: dimensions must be positive");
  }
  JlTransform out;
  out.distribution = dist;
  out.seed = seed;
  out.reduced_dim = m;
  if (dist == JlDistribution::Identity) {
    if (m != d) {
      throw ConfigError("sample_jl: identity bypass requires m == d");
    }
    out.t = Matrix::Identity(d, d);
    return out;
  }
  CounterRng rng(seed, streams::projection);
  out.t.resize(m, d);
  const double scale = 1.0 / std::sqrt(double(m));
  for (Index j = 0; j < d; ++j) {
    for (Index i = 0; i < m; ++i) {
      double v = 0.0;
      switch (dist) {
        case JlDistribution::Gaussian: v = rng.gaussian(); break;
        case JlDistribution::Sign: v = rng.sign(); break;
        case JlDistribution::DatabaseFriendly: v = rng.three_point(); break;
        case JlDistribution::Identity: break;  // handled above
      }
      out.t(i, j) = v * scale;
    }
  }
  return out;
}

// ============================================================================
// Rank sketching
// ============================================================================

struct SketchedDictionary {
  Matrix q;  // d x k, orthonormal columns spanning range(D * Omega)
  Matrix w;  // k x n, W = Q^T D, so D~ = Q W
  Index k = 0;
  std::uint64_t seed = 0;
  bool rank_deficient = false;
  /// Power-iteration estimate of ||D - D~||_2 (the reporting convention:
  /// 100 iterations, tolerance 1e-8, converging from below).
  double spectral_residual_estimate = 0.0;
};

/// Randomized range finder: Q = thin_qr(D * Omega).Q for a Gaussian
/// Omega with k columns, W = Q^T D.
inline SketchedDictionary range_finder(const Dictionary& dict, Index k,
                                       std::uint64_t seed) {
  const Index d = dict.dim(), n = dict.size();
  if (k < 1 || k > std::min(d, n)) {
    throw ConfigError("range_finder: k must lie in [1, min(d, n)]");
  }
  const Matrix omega = sample_gaussian_sketch(n, k, seed);
  const ThinQr qr = thin_qr(dict.atoms * omega);
  SketchedDictionary out;
  out.q = qr.q;
  out.w = qr.q.transpose() * dict.atoms;
  out.k = k;
  out.seed = seed;
  out.rank_deficient = qr.rank_deficient;
  out.spectral_residual_estimate = spectral_norm_power(
      [&](const Vector& v) {
        return Vector(dict.atoms * v - out.q * (out.w * v));
      },
      [&](const Vector& u) {
        return Vector(dict.atoms.transpose() * u -
                      out.w.transpose() * (out.q.transpose() * u));
      },
      n);
  return out;
}

/// Gradient step against the sketched dictionary:
/// z - (2/(tau*s)) * (W^T W z - W^T Q^T x); O(nk) through the factors.
/// `wt_qtx` must be W^T (Q^T x) (cache it across iterations).
inline Vector rma_gradient_step_cached(const SketchedDictionary& sketch,
                                       const Vector& wt_qtx, double tau,
                                       double s, const Vector& z) {
  if (z.size() != sketch.w.cols()) {
    throw DimensionError("rma_gradient_step: code length != number of atoms");
  }
  if (!(s > 0.0)) throw ConfigError("rma_gradient_step: s must be positive");
  return z - (2.0 / (tau * s)) *
                 (sketch.w.transpose() * (sketch.w * z) - wt_qtx).eval();
}

/// Convenience form that recomputes the W^T Q^T x cache.
inline Vector rma_gradient_step(const SketchedDictionary& sketch,
                                const ProblemInstance& inst,
                                const SparseCode& z, double s) {
  const Vector wt_qtx =
      sketch.w.transpose() * (sketch.q.transpose() * inst.signal.values);
  return rma_gradient_step_cached(sketch, wt_qtx, inst.tau, s, z.values);
}

/// ISTA on the l1 relaxation of the sketched problem, entirely in the
/// factor representation (never materialises Q W).
inline IstaResult ista_init_sketched(const SketchedDictionary& sketch,
                                     const ProblemInstance& inst,
                                     Index max_iter = 2000, double eps = 1e-12) {
  const Vector qtx = sketch.q.transpose() * inst.signal.values;
  const double x2 = inst.signal.values.squaredNorm();
  const double off2 = std::max(0.0, x2 - qtx.squaredNorm());
  const double sigma = sigma_max(sketch.w);
  return detail::ista_loop(
      sketch.w.cols(), inst.lambda, sigma, x2,
      [&](const Vector& z) {
        return Vector(sketch.w.transpose() * (sketch.w * z - qtx));
      },
      [&](const Vector& z) {
        return (sketch.w * z - qtx).squaredNorm() + off2;
      },
      max_iter, eps);
}

inline SolveReport pgd_rma_solve(const ProblemInstance& inst,
                                 const SketchedDictionary& sketch,
                                 const SparseCode& init,
                                 const PgdOptions& opts = {});

/// PGD against the sketched dictionary D~ = Q W.  Same contract as
/// pgd_solve (the shrinkage-mode init certificate and the in-run
/// assertions are evaluated on the sketched objective
/// ||x - D~ z||^2 + lambda ||z||_0).
inline SolveReport pgd_rma_solve(const ProblemInstance& inst, Index k,
                                 std::uint64_t seed, const SparseCode& init,
                                 const PgdOptions& opts = {}) {
  if (init.size() != inst.atoms()) {
    throw DimensionError("pgd_rma_solve: init length != number of atoms");
  }
  const SketchedDictionary sketch = range_finder(inst.dict, k, seed);
  return pgd_rma_solve(inst, sketch, init, opts);
}

/// Overload reusing an existing sketch.
inline SolveReport pgd_rma_solve(const ProblemInstance& inst,
                                 const SketchedDictionary& sketch,
                                 const SparseCode& init,
                                 const PgdOptions& opts) {
  if (init.size() != inst.atoms()) {
    throw DimensionError("pgd_rma_solve: init length != number of atoms");
  }
  if (!(opts.eps > 0.0)) {
    throw ConfigError("pgd_rma_solve: eps must be positive");
  }
  const Vector& x = inst.signal.values;
  const Vector qtx = sketch.q.transpose() * x;
  const double off2 = std::max(0.0, x.squaredNorm() - qtx.squaredNorm());

  SolveReport report;
  report.sketch_rank = sketch.k;
  report.draw_seed = sketch.seed;
  report.sketch_residual = sketch.spectral_residual_estimate;

  const bool shrinkage = opts.step.mode == StepMode::Shrinkage;
  switch (opts.step.mode) {
    case StepMode::Shrinkage:
      report.s_used = shrinkage_step_size(init.support_size(), inst.lambda,
                                          inst.tau, opts.step.margin);
      if (init.support_size() == 0) {
        report.warnings.push_back(
            "empty-support init: the shrinkage step rule degenerates and the "
            "solve is trivial");
      }
      break;
    case StepMode::Lipschitz:
      report.s_used = 2.0 * std::pow(sigma_max(sketch.w), 2);
      if (report.s_used == 0.0) {
        throw ConfigError(
            "pgd_rma_solve: zero sketched dictionary has no Lipschitz step");
      }
      break;
    case StepMode::Manual:
      if (!(opts.step.manual_s > 0.0)) {
        throw ConfigError("pgd_rma_solve: manual step s must be positive");
      }
      report.s_used = opts.step.manual_s;
      break;
  }
  report.theta_used = std::sqrt(2.0 * inst.lambda / (inst.tau * report.s_used));

  if (shrinkage) {
    const double r0 =
        std::sqrt((sketch.w * init.values - qtx).squaredNorm() + off2);
    if (r0 > 1.0 + 1e-9) {
      throw InvalidInit(
          "pgd_rma_solve: shrinkage mode requires ||x - D~ z0|| <= 1 (got " +
          std::to_string(r0) + ")");
    }
  }
  if (x.norm() == 0.0) {
    report.code = SparseCode::zeros(inst.atoms());
    report.terminated_by = Termination::ObjectiveConverged;
    if (opts.record_trace) report.trace.push_back({0, 0.0, 0, 0.0});
    return report;
  }

  detail::LoopOutcome outcome;
  if (shrinkage) {
    const Support s0 = init.support;
    const Matrix ws = columns(sketch.w, s0);
    Vector z0(Index(s0.size()));
    for (std::size_t i = 0; i < s0.size(); ++i) z0[Index(i)] = init.values[s0[i]];
    outcome = detail::threshold_descent(
        [&](const Vector& z) { return Vector(ws.transpose() * (ws * z - qtx)); },
        [&](const Vector& z) { return (ws * z - qtx).squaredNorm() + off2; },
        std::move(z0), inst.lambda, inst.tau, report.s_used, opts, true);
    Vector full = Vector::Zero(inst.atoms());
    for (std::size_t i = 0; i < s0.size(); ++i) full[s0[i]] = outcome.z[Index(i)];
    outcome.z = std::move(full);
  } else {
    outcome = detail::threshold_descent(
        [&](const Vector& z) {
          return Vector(sketch.w.transpose() * (sketch.w * z - qtx));
        },
        [&](const Vector& z) {
          return (sketch.w * z - qtx).squaredNorm() + off2;
        },
        init.values, inst.lambda, inst.tau, report.s_used, opts, false);
  }
  report.code = SparseCode::from_values(std::move(outcome.z));
  report.trace = std::move(outcome.trace);
  report.terminated_by = outcome.terminated_by;
  report.iterations = outcome.iterations;
  report.support_shrank_every_step = outcome.support_shrank;

  auto sketched_objective = [&](const SparseCode& code) {
    return (sketch.w * code.values - qtx).squaredNorm() + off2 +
           inst.lambda * double(code.support_size());
  };

  // Refinement against the sketched problem: the same support chain as
  // pgd_solve, with least squares taken in the factor space
  // (min_y ||Q^T x - W_S y||).  Each jump is verified against the
  // sketched proximal map, so the chain is sound from any iterate,
  // including one whose iteration budget expired mid-descent.
  if (opts.refine) {
    const double scale = 2.0 / (inst.tau * report.s_used);
    Support support = report.code.support;
    while (!support.empty()) {
      const Matrix ws = columns(sketch.w, support);
      Eigen::CompleteOrthogonalDecomposition<Matrix> cod(ws);
      cod.setThreshold(1e-12);
      const Vector y = cod.solve(qtx);
      Vector full = Vector::Zero(inst.atoms());
      for (std::size_t i = 0; i < support.size(); ++i) {
        full[support[i]] = y[Index(i)];
      }
      const SparseCode ls = SparseCode::from_values(std::move(full));
      const Vector u =
          ls.values -
          scale * (sketch.w.transpose() * (sketch.w * ls.values - qtx));
      const SparseCode back = hard_threshold(u, report.theta_used);
      const bool fixed_point =
          back.support == ls.support &&
          (back.values - ls.values).norm() <=
              1e-12 * std::max(1.0, ls.values.norm());
      if (fixed_point) {
        if (sketched_objective(ls) <=
            sketched_objective(report.code) + 1e-12) {
          report.code = ls;
          report.refined = true;
        }
        break;
      }
      if (!support_subset(back.support, ls.support) ||
          back.support.size() >= ls.support.size()) {
        break;
      }
      support = back.support;
    }
  }
  report.final_objective = sketched_objective(report.code);
  return report;
}

// ============================================================================
// Dimension reduction
// ============================================================================

struct ReducedInstance {
  ProblemInstance reduced;  // the m-dimensional problem (Tx, TD, lambda, tau)
  JlTransform transform;
};

/// Project an instance through an m x d JL map: x -> Tx, D -> TD.  The
/// reduced instance is built verbatim (no re-normalisation), so reduced
/// column norms may slightly exceed 1; the solver handles that internally.
inline ReducedInstance build_reduced_instance(const ProblemInstance& inst,
                                              Index m, JlDistribution dist,
                                              std::uint64_t seed) {
  ReducedInstance out;
  out.transform = sample_jl(m, inst.dim(), dist, seed);
  out.reduced.dict = Dictionary(out.transform.t * inst.dict.atoms);
  out.reduced.signal = Signal(out.transform.t * inst.signal.values);
  out.reduced.lambda = inst.lambda;
  out.reduced.tau = inst.tau;
  return out;
}

inline SolveReport pgd_rdr_solve(const ReducedInstance& red,
                                 const SparseCode& init,
                                 const PgdOptions& opts);

/// PGD on the reduced problem min_z ||Tx - TD z||^2 + lambda ||z||_0.
/// Internally the reduced dictionary is rescaled to max column norm <= 1
/// (the scaling the shrinkage guarantees assume) and the code is mapped
/// back exactly; the init certificate ||Tx - TD z0|| <= 1 is evaluated on
/// the unscaled reduced data.
inline SolveReport pgd_rdr_solve(const ProblemInstance& inst, Index m,
                                 JlDistribution dist, std::uint64_t seed,
                                 const SparseCode& init,
                                 const PgdOptions& opts = {}) {
  const ReducedInstance red = build_reduced_instance(inst, m, dist, seed);
  return pgd_rdr_solve(red, init, opts);
}

/// Overload reusing an existing reduction.
inline SolveReport pgd_rdr_solve(const ReducedInstance& red,
                                 const SparseCode& init,
                                 const PgdOptions& opts = {}) {
  const ProblemInstance& r = red.reduced;
  if (init.size() != r.atoms()) {
    throw DimensionError("pgd_rdr_solve: init length != number of atoms");
  }
  if (opts.step.mode == StepMode::Shrinkage) {
    const double r0 = residual_norm(r, init);
    if (r0 > 1.0 + 1e-9) {
      throw InvalidInit(
          "pgd_rdr_solve: shrinkage mode requires ||Tx - TD z0|| <= 1 (got " +
          std::to_string(r0) + ")");
    }
  }

  // Rescale to the unit-column regime; z' = rescale * z is the exact
  // correspondence between the two problems, so the init maps with it.
  double max_col = 0.0;
  for (Index j = 0; j < r.dict.atoms.cols(); ++j) {
    max_col = std::max(max_col, r.dict.atoms.col(j).norm());
  }
  const double rescale = std::max(1.0, max_col * (1.0 + 1e-9));
  ProblemInstance work;
  work.dict =
      rescale == 1.0 ? r.dict : Dictionary(r.dict.atoms / rescale);
  work.signal = r.signal;
  work.lambda = r.lambda;
  work.tau = r.tau;

  SparseCode scaled_init;
  scaled_init.values = init.values * rescale;
  scaled_init.support = init.support;

  SolveReport report = pgd_solve(work, scaled_init, opts);

  // Map the code (trace objectives are scale-invariant) back.
  if (rescale != 1.0) {
    report.code.values /= rescale;  // exact zeros stay exact
    report.final_objective = objective(r, report.code);
  }
  report.reduced_dim = red.transform.reduced_dim;
  report.draw_seed = red.transform.seed;
  report.draw_distribution = to_string(red.transform.distribution);
  return report;
}

}  // namespace l0prox
