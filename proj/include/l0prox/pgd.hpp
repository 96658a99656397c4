#pragma once

// Proximal gradient descent for l0-penalised least squares.
//
// The iteration alternates a gradient step on the quadratic part with a
// hard threshold at theta = sqrt(2*lambda/(tau*s)).  With the shrinkage
// step rule (s beyond both 2|S| and 2(1+lambda|S|)/(lambda*tau), inflated
// by a strict margin) the support of the iterates can only shrink and the
// objective decreases by at least ((tau-1)*s/2)*||z_t - z_{t-1}||^2 per
// step; both facts are asserted during the run and any observed violation
// is raised as NonDecreaseDetected rather than ignored.

#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "l0prox/core.hpp"
#include "l0prox/errors.hpp"
#include "l0prox/types.hpp"

namespace l0prox {

// ============================================================================
// Elementwise operators
// ============================================================================

/// Hard threshold: zero exactly when |u_j| < theta, so boundary values
/// are kept.  Output zeros are bitwise zeros.
inline SparseCode hard_threshold(const Vector& u, double theta) {
  if (!(theta >= 0.0) || !std::isfinite(theta)) {
    throw ConfigError("hard_threshold: theta must be finite and >= 0");
  }
  Vector out(u.size());
  for (Index j = 0; j < u.size(); ++j) {
    out[j] = std::abs(u[j]) < theta ? 0.0 : u[j];
  }
  return SparseCode::from_values(std::move(out));
}

/// Soft threshold: sign(u_j) * max(|u_j| - theta, 0).
inline SparseCode soft_threshold(const Vector& u, double theta) {
  if (!(theta >= 0.0) || !std::isfinite(theta)) {
    throw ConfigError("soft_threshold: theta must be finite and >= 0");
  }
  Vector out(u.size());
  for (Index j = 0; j < u.size(); ++j) {
    const double m = std::abs(u[j]) - theta;
    out[j] = m > 0.0 ? (u[j] > 0.0 ? m : -m) : 0.0;
  }
  return SparseCode::from_values(std::move(out));
}

// ============================================================================
// Step-size rules
// ============================================================================

enum class StepMode {
  Shrinkage,  // support-shrinkage-safe step from the init support size
  Lipschitz,  // s = 2 * sigma_max(D)^2
  Manual,     // caller-supplied s
};

struct StepRule {
  StepMode mode = StepMode::Shrinkage;
  double manual_s = 0.0;  // used only in Manual mode
  double margin = 1.01;   // strict-inequality inflation in Shrinkage mode
};

/// Smallest support-shrinkage-safe scale, inflated by `margin` to make
/// the strict inequality s > max{2|S|, 2(1+lambda|S|)/(lambda*tau)} hold.
/// |S| = 0 degenerates to margin * 2/(lambda*tau) (the caller should warn:
/// an empty-support init makes the run trivial).
inline double shrinkage_step_size(Index support_size, double lambda,
                                  double tau, double margin = 1.01) {
  if (support_size < 0) {
    throw ConfigError("shrinkage_step_size: negative support size");
  }
  if (!(lambda > 0.0)) {
    throw ConfigError("shrinkage_step_size: lambda must be positive");
  }
  if (!(tau > 1.0)) throw ConfigError("shrinkage_step_size: tau must exceed 1");
  if (!(margin > 1.0)) {
    throw ConfigError("shrinkage_step_size: margin must exceed 1");
  }
  const double ssz = double(support_size);
  return margin *
         std::max(2.0 * ssz, 2.0 * (1.0 + lambda * ssz) / (lambda * tau));
}

// ============================================================================
// One iteration
// ============================================================================

/// Gradient step z - (2/(tau*s)) * (D^T D z - D^T x), computed as two
/// matrix-vector products (D^T D is never formed).
inline Vector gradient_step(const ProblemInstance& inst, const SparseCode& z,
                            double s) {
  if (z.size() != inst.atoms()) {
    throw DimensionError("gradient_step: code length != number of atoms");
  }
  if (!(s > 0.0)) throw ConfigError("gradient_step: s must be positive");
  const Vector r = inst.dict.atoms * z.values - inst.signal.values;
  return z.values - (2.0 / (inst.tau * s)) * (inst.dict.atoms.transpose() * r);
}

/// Gradient step followed by the hard threshold at sqrt(2 lambda/(tau s)).
inline SparseCode proximal_map(const ProblemInstance& inst, const SparseCode& z,
                               double s) {
  const double theta = std::sqrt(2.0 * inst.lambda / (inst.tau * s));
  return hard_threshold(gradient_step(inst, z, s), theta);
}

// ============================================================================
// ISTA initialiser (l1 relaxation)
// ============================================================================

struct IstaResult {
  SparseCode code;
  Index iterations = 0;
  double l1_objective = 0.0;   // ||x - D z||^2 + lambda ||z||_1 at the result
  bool certificate_ok = false; // l1 objective <= ||x||^2 (monotone from 0)
};

namespace detail {

/// Shared ISTA loop over an abstract quadratic: half_grad(z) = D^T(Dz - x),
/// resid2(z) = ||Dz - x||^2.  Step 1/(2 sigma_max^2); start at zero.
template <class HalfGrad, class Resid2>
IstaResult ista_loop(Index n, double lambda, double sigma_max_value,
                     double x_norm2, const HalfGrad& half_grad,
                     const Resid2& resid2, Index max_iter, double eps) {
  IstaResult out;
  if (sigma_max_value == 0.0 || x_norm2 == 0.0) {
    out.code = SparseCode::zeros(n);
    out.l1_objective = x_norm2;
    out.certificate_ok = true;
    return out;
  }
  const double alpha = 1.0 / (2.0 * sigma_max_value * sigma_max_value);
  Vector z = Vector::Zero(n);
  double obj = x_norm2;  // resid2(0) + 0
  Index t = 0;
  for (; t < max_iter; ++t) {
    const Vector u = z - 2.0 * alpha * half_grad(z);
    const double level = alpha * lambda;
    Vector znew(n);
    for (Index j = 0; j < n; ++j) {
      const double m = std::abs(u[j]) - level;
      znew[j] = m > 0.0 ? (u[j] > 0.0 ? m : -m) : 0.0;
    }
    const double obj_new = resid2(znew) + lambda * znew.template lpNorm<1>();
    z.swap(znew);
    const bool done = std::abs(obj_new - obj) <= eps * std::max(1.0, obj);
    obj = obj_new;
    if (done) {
      ++t;
      break;
    }
  }
  // Snap tiny survivors to exact zero so the support is well defined.
  for (Index j = 0; j < n; ++j) {
    if (std::abs(z[j]) < 1e-12) z[j] = 0.0;
  }
  out.code = SparseCode::from_values(std::move(z));
  out.iterations = t;
  out.l1_objective = resid2(out.code.values) +
                     lambda * out.code.values.template lpNorm<1>();
  out.certificate_ok = out.l1_objective <= x_norm2 * (1.0 + 1e-12) + 1e-15;
  return out;
}

}  // namespace detail

/// Run ISTA on the l1 relaxation ||x - D z||^2 + lambda ||z||_1 from zero
/// with step 1/(2 sigma_max(D)^2).  Monotone descent from z = 0 makes the
/// result a certified init: its l1 objective (hence the squared residual)
/// never exceeds ||x||^2.
inline IstaResult ista_init(const ProblemInstance& inst, Index max_iter = 2000,
                            double eps = 1e-12) {
  const Matrix& d = inst.dict.atoms;
  const Vector& x = inst.signal.values;
  const double sigma = sigma_max(d);
  return detail::ista_loop(
      inst.atoms(), inst.lambda, sigma, x.squaredNorm(),
      [&](const Vector& z) { return Vector(d.transpose() * (d * z - x)); },
      [&](const Vector& z) { return (d * z - x).squaredNorm(); }, max_iter,
      eps);
}

// ============================================================================
// Solver
// ============================================================================

enum class Termination {
  ObjectiveConverged,  // |L_t - L_{t-1}| <= eps * max(1, L_{t-1})
  IterateConverged,    // ||z_t - z_{t-1}|| <= eps
  MaxIterations,
};

inline const char* to_string(Termination t) {
  switch (t) {
    case Termination::ObjectiveConverged: return "objective_converged";
    case Termination::IterateConverged: return "iterate_converged";
    case Termination::MaxIterations: return "max_iterations";
  }
  return "unknown";
}

struct PgdOptions {
  StepRule step;
  double eps = 1e-10;
  Index max_iter = 10000;
  bool record_trace = true;
  /// After convergence, jump to the exact least-squares critical point on
  /// the final support when that point is verifiably the fixed point the
  /// iteration was contracting towards.
  bool refine = true;
};

struct SolveReport {
  SparseCode code;
  std::vector<IterationRecord> trace;
  Termination terminated_by = Termination::MaxIterations;
  Index iterations = 0;  // gradient/threshold steps taken
  double s_used = 0.0;
  double theta_used = 0.0;
  double final_objective = 0.0;
  bool support_shrank_every_step = true;
  bool refined = false;
  std::vector<std::string> warnings;

  // Populated by the sketching solvers, unused by plain PGD.
  Index sketch_rank = 0;          // RMA target rank k
  Index reduced_dim = 0;          // RDR reduced dimension m
  std::uint64_t draw_seed = 0;    // seed of the random draw
  std::string draw_distribution;  // RDR entry distribution
  double sketch_residual = 0.0;   // power-iteration estimate of ||D - D~||
};

namespace detail {

/// Maximum tolerated overshoot when asserting the per-step sufficient
/// decrease in shrinkage mode.
inline constexpr double kDecreaseSlack = 1e-10;

struct LoopOutcome {
  Vector z;  // final iterate (length of the working space)
  std::vector<IterationRecord> trace;
  Termination terminated_by = Termination::MaxIterations;
  Index iterations = 0;
  bool support_shrank = true;
};

/// The PGD loop over an abstract quadratic: half_grad(z) = D^T(Dz - x)
/// (in the working coordinates), resid2(z) = ||Dz - x||^2.  When
/// `assert_guarantees` is set, support growth or a sufficient-decrease
/// violation raises NonDecreaseDetected.
template <class HalfGrad, class Resid2>
LoopOutcome threshold_descent(const HalfGrad& half_grad, const Resid2& resid2,
                              Vector z0, double lambda, double tau, double s,
                              const PgdOptions& opts, bool assert_guarantees) {
  const double theta = std::sqrt(2.0 * lambda / (tau * s));
  const double scale = 2.0 / (tau * s);
  const double decrease = (tau - 1.0) * s / 2.0;

  LoopOutcome out;
  out.z = std::move(z0);
  auto nnz = [](const Vector& v) {
    Index c = 0;
    for (Index j = 0; j < v.size(); ++j) c += (v[j] != 0.0);
    return c;
  };
  double obj = resid2(out.z) + lambda * double(nnz(out.z));
  if (opts.record_trace) {
    out.trace.push_back({0, obj, nnz(out.z), 0.0});
  }
  for (Index t = 1; t <= opts.max_iter; ++t) {
    const Vector u = out.z - scale * half_grad(out.z);
    Vector znew(u.size());
    for (Index j = 0; j < u.size(); ++j) {
      znew[j] = std::abs(u[j]) < theta ? 0.0 : u[j];
    }
    for (Index j = 0; j < u.size(); ++j) {
      if (out.z[j] == 0.0 && znew[j] != 0.0) {
        out.support_shrank = false;
        if (assert_guarantees) {
          throw NonDecreaseDetected(
              "threshold descent: support grew at iteration " +
              std::to_string(t) +
              " despite the shrinkage step rule; the run's assumptions do "
              "not hold");
        }
      }
    }
    const double step = (znew - out.z).norm();
    const double obj_new = resid2(znew) + lambda * double(nnz(znew));
    if (assert_guarantees &&
        obj_new > obj - decrease * step * step + kDecreaseSlack) {
      throw NonDecreaseDetected(
          "threshold descent: sufficient decrease failed at iteration " +
          std::to_string(t) + " (L went from " + std::to_string(obj) + " to " +
          std::to_string(obj_new) + ")");
    }
    out.z.swap(znew);
    out.iterations = t;
    if (opts.record_trace) {
      out.trace.push_back({t, obj_new, nnz(out.z), step});
    }
    const bool objective_done =
        std::abs(obj_new - obj) <= opts.eps * std::max(1.0, obj);
    obj = obj_new;
    if (objective_done) {
      out.terminated_by = Termination::ObjectiveConverged;
      return out;
    }
    if (step <= opts.eps) {
      out.terminated_by = Termination::IterateConverged;
      return out;
    }
  }
  out.terminated_by = Termination::MaxIterations;
  return out;
}

}  // namespace detail

/// Proximal gradient descent on an instance.  In Shrinkage mode the init
/// must satisfy ||x - D z0|| <= 1 (up to 1e-9); computation is restricted
/// to the atoms in the init support (the iterates provably stay there),
/// and both shrinkage and sufficient decrease are asserted each step.
inline SolveReport pgd_solve(const ProblemInstance& inst,
                             const SparseCode& init,
                             const PgdOptions& opts = {}) {
  if (init.size() != inst.atoms()) {
    throw DimensionError("pgd_solve: init length != number of atoms");
  }
  if (!(opts.eps > 0.0)) throw ConfigError("pgd_solve: eps must be positive");
  if (opts.max_iter < 1) throw ConfigError("pgd_solve: max_iter must be >= 1");

  SolveReport report;
  const bool shrinkage = opts.step.mode == StepMode::Shrinkage;

  // Step size.
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
      report.s_used = 2.0 * std::pow(sigma_max(inst.dict.atoms), 2);
      if (report.s_used == 0.0) {
        throw ConfigError("pgd_solve: zero dictionary has no Lipschitz step");
      }
      break;
    case StepMode::Manual:
      if (!(opts.step.manual_s > 0.0)) {
        throw ConfigError("pgd_solve: manual step s must be positive");
      }
      report.s_used = opts.step.manual_s;
      break;
  }
  report.theta_used = std::sqrt(2.0 * inst.lambda / (inst.tau * report.s_used));

  if (shrinkage) {
    const double r0 = residual_norm(inst, init);
    if (r0 > 1.0 + 1e-9) {
      throw InvalidInit(
          "pgd_solve: shrinkage mode requires ||x - D z0|| <= 1 (got " +
          std::to_string(r0) + ")");
    }
  }

  // Zero signal: z = 0 is the global optimum (objective 0); return it.
  if (inst.signal.values.norm() == 0.0) {
    report.code = SparseCode::zeros(inst.atoms());
    report.terminated_by = Termination::ObjectiveConverged;
    report.final_objective = 0.0;
    if (opts.record_trace) report.trace.push_back({0, 0.0, 0, 0.0});
    return report;
  }

  const Matrix& d = inst.dict.atoms;
  const Vector& x = inst.signal.values;
  detail::LoopOutcome outcome;
  if (shrinkage) {
    const Support s0 = init.support;
    const Matrix ds = columns(d, s0);
    Vector z0(Index(s0.size()));
    for (std::size_t i = 0; i < s0.size(); ++i) z0[Index(i)] = init.values[s0[i]];
    outcome = detail::threshold_descent(
        [&](const Vector& z) { return Vector(ds.transpose() * (ds * z - x)); },
        [&](const Vector& z) { return (ds * z - x).squaredNorm(); },
        std::move(z0), inst.lambda, inst.tau, report.s_used, opts, true);
    Vector full = Vector::Zero(inst.atoms());
    for (std::size_t i = 0; i < s0.size(); ++i) full[s0[i]] = outcome.z[Index(i)];
    outcome.z = std::move(full);
  } else {
    outcome = detail::threshold_descent(
        [&](const Vector& z) { return Vector(d.transpose() * (d * z - x)); },
        [&](const Vector& z) { return (d * z - x).squaredNorm(); },
        init.values, inst.lambda, inst.tau, report.s_used, opts, false);
  }

  report.code = SparseCode::from_values(std::move(outcome.z));
  report.trace = std::move(outcome.trace);
  report.terminated_by = outcome.terminated_by;
  report.iterations = outcome.iterations;
  report.support_shrank_every_step = outcome.support_shrank;

  // Refinement: on a fixed support the iteration is an affine contraction
  // whose limit is the least-squares solution there, and when that point
  // carries below-threshold values the (infinite) iteration would shed
  // them and contract again on the smaller support.  Follow that chain:
  // take the least-squares point, let the proximal map drop what it
  // would drop, and repeat.  Jump only to a candidate that is verifiably
  // a fixed point of the full proximal map and does not increase the
  // objective; a candidate whose support wants to grow leaves the raw
  // iterate untouched.  Because every jump is verified against the
  // proximal map itself, the chain is sound from any iterate — including
  // one whose iteration budget expired mid-descent.
  if (opts.refine) {
    Support support = report.code.support;
    for (;;) {
      const LeastSquaresResult ls = least_squares_on_support(inst, support);
      const SparseCode back = proximal_map(inst, ls.code, report.s_used);
      const bool fixed_point =
          back.support == ls.code.support &&
          (back.values - ls.code.values).norm() <=
              1e-12 * std::max(1.0, ls.code.values.norm());
      if (fixed_point) {
        if (objective(inst, ls.code) <=
            objective(inst, report.code) + 1e-12) {
          report.code = ls.code;
          report.refined = true;
        }
        break;
      }
      // Least-squares stationarity makes the gradient step the identity
      // on the support, so the proximal map can only zero below-threshold
      // values there; a strictly smaller kept set continues the chain.
      if (!support_subset(back.support, ls.code.support) ||
          back.support.size() >= ls.code.support.size()) {
        break;
      }
      support = back.support;
    }
  }
  report.final_objective = objective(inst, report.code);
  return report;
}

}  // namespace l0prox
