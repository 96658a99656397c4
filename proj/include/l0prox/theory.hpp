#pragma once

// Numerical verification engine.
//
// Everything here either computes exact reference answers on small
// problems (exhaustive support enumeration, sparse extremal eigenvalues)
// or evaluates the suboptimality-gap certificates for the PGD solvers.
// A certificate carries the bound value, the measured gap, and one flag
// per hypothesis; `assumptions_ok` is the conjunction, and a *binding*
// certificate (assumptions_ok == true) of the deterministic kind must
// never be violated -- that is the property the verify campaigns test.

#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "l0prox/core.hpp"
#include "l0prox/errors.hpp"
#include "l0prox/pgd.hpp"
#include "l0prox/randomized.hpp"
#include "l0prox/rng.hpp"
#include "l0prox/types.hpp"

namespace l0prox {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

// ============================================================================
// Exhaustive oracle
// ============================================================================

struct OracleSolution {
  SparseCode code;                // lexicographically first tied optimum
  double objective = kInf;
  std::vector<SparseCode> ties;   // all optima within 1e-12, sorted by support
  Index supports_enumerated = 0;
};

/// Global minimiser of ||x - D z||^2 + lambda ||z||_0 by exhaustive
/// enumeration of supports up to `max_support_size` (default min(d, n)),
/// solving least squares on each.  Refuses n > 20.  Ties within 1e-12 of
/// the optimum are all recorded (deduplicated by realised support).
inline OracleSolution brute_force_global(const ProblemInstance& inst,
                                         Index max_support_size = -1) {
  const Index n = inst.atoms();
  if (n > 20) {
    throw RefuseEnumeration("brute_force_global: " + std::to_string(n) +
                            " atoms exceed the enumeration limit of 20");
  }
  Index cap = max_support_size < 0 ? std::min(inst.dim(), n) : max_support_size;
  cap = std::min(cap, n);

  struct Candidate {
    SparseCode code;
    double obj;
  };
  std::vector<Candidate> near_best;
  double best = kInf;
  OracleSolution out;
  const std::uint32_t limit = std::uint32_t(1) << n;
  for (std::uint32_t mask = 0; mask < limit; ++mask) {
    if (std::popcount(mask) > int(cap)) continue;
    ++out.supports_enumerated;
    Support support;
    for (Index j = 0; j < n; ++j) {
      if (mask & (std::uint32_t(1) << j)) support.push_back(j);
    }
    LeastSquaresResult ls = least_squares_on_support(inst, support);
    const double obj = objective(inst, ls.code);  // realised ||z||_0
    if (obj <= best + 1e-12) {
      near_best.push_back({std::move(ls.code), obj});
      best = std::min(best, obj);
    }
  }
  // Filter against the final optimum, dedupe by realised support.
  std::vector<Support> seen;
  for (auto& cand : near_best) {
    if (cand.obj > best + 1e-12) continue;
    bool dup = false;
    for (const auto& s : seen) dup = dup || s == cand.code.support;
    if (dup) continue;
    seen.push_back(cand.code.support);
    out.ties.push_back(std::move(cand.code));
  }
  std::sort(out.ties.begin(), out.ties.end(),
            [](const SparseCode& a, const SparseCode& b) {
              return a.support < b.support;
            });
  out.objective = best;
  out.code = out.ties.front();
  return out;
}

// ============================================================================
// Capped-l1 machinery
// ============================================================================

/// The capped-l1 penalty lambda * min(|t|, b)/b used to certify local
/// solutions; `b` is the cap.
struct CappedPenalty {
  double lambda = 0.0;
  double b = 0.0;
};

namespace detail {

/// Canonical derivative of the capped-l1 penalty away from its kinks.
inline double capped_derivative(double s, double lambda, double b) {
  if (s == 0.0 || std::abs(s) >= b) return 0.0;
  return s > 0.0 ? lambda / b : -lambda / b;
}

}  // namespace detail

struct ThetaResult {
  double value = 0.0;
  bool via_grid = false;  // true when the documented grid supremum was used
};

/// Degree of nonconvexity of the capped-l1 penalty at t with slack kappa:
///     theta(t, kappa) = sup_s { -sgn(s - t) (P'(s) - P'(t)) - kappa |s - t| }.
/// Closed form max(0, lambda/b - kappa * ||t| - b|) for |t| > b and t = 0;
/// for 0 < |t| <= b the documented fallback evaluates the supremum on a
/// dense grid with kink-adjacent candidates.  (The closed form is written
/// with ||t| - b|, which the supremum gives for negative t as well; the
/// sum is symmetric in the sign of t.)
inline ThetaResult degree_of_nonconvexity(double t, double kappa,
                                          double lambda, double b) {
  if (!(b > 0.0)) throw ConfigError("degree_of_nonconvexity: b must be > 0");
  if (!(lambda > 0.0)) {
    throw ConfigError("degree_of_nonconvexity: lambda must be > 0");
  }
  if (!(kappa >= 0.0)) {
    throw ConfigError("degree_of_nonconvexity: kappa must be >= 0");
  }
  ThetaResult out;
  const double at = std::abs(t);
  if (t == 0.0 || at > b) {
    out.value = std::max(0.0, lambda / b - kappa * std::abs(at - b));
    return out;
  }
  // Grid supremum over the candidate set: kink-adjacent points and a
  // dense uniform grid wide enough to contain the maximiser.
  out.via_grid = true;
  const double pt = detail::capped_derivative(t, lambda, b);
  auto f = [&](double s) {
    const double diff = s - t;
    const double sgn = diff > 0.0 ? 1.0 : (diff < 0.0 ? -1.0 : 0.0);
    return -sgn * (detail::capped_derivative(s, lambda, b) - pt) -
           kappa * std::abs(diff);
  };
  const double reach =
      at + b + (kappa > 0.0 ? lambda / (b * kappa) : 0.0) + 1.0;
  const double delta = 1e-9 * std::max({1.0, b, at});
  double sup = 0.0;  // s = t contributes exactly 0
  for (double kink : {0.0, b, -b, t}) {
    sup = std::max({sup, f(kink - delta), f(kink + delta)});
  }
  const int grid_points = 20001;
  for (int i = 0; i < grid_points; ++i) {
    const double s = -reach + (2.0 * reach) * double(i) / (grid_points - 1);
    sup = std::max(sup, f(s));
  }
  out.value = sup;
  return out;
}

inline double quadratic_gradient_entry(const Matrix& d, const Vector& resid,
                                       Index j) {
  return 2.0 * d.col(j).dot(resid);
}

/// Full gradient of Q(z) = ||x - D z||^2: 2 D^T (D z - x).
inline Vector quadratic_gradient(const Matrix& d, const Vector& x,
                                 const Vector& z) {
  return 2.0 * (d.transpose() * (d * z - x));
}

/// Norm of the minimal subgradient-style residual
///     || 2 D^T (D z - x) + R'(z) ||_2
/// with R the capped-l1 penalty and R'(z_j) chosen anywhere between the
/// one-sided derivatives (the clamp rule): a zero residual certifies z as
/// a local solution of the capped-l1 problem.
inline double local_solution_residual(const Matrix& d, const Vector& x,
                                      double lambda, const SparseCode& z,
                                      double b) {
  if (!(b > 0.0)) throw ConfigError("local_solution_residual: b must be > 0");
  if (z.size() != d.cols()) {
    throw DimensionError("local_solution_residual: code length mismatch");
  }
  const Vector g = quadratic_gradient(d, x, z.values);
  const double lb = lambda / b;
  double acc = 0.0;
  for (Index j = 0; j < z.size(); ++j) {
    const double zj = z.values[j];
    double lo, hi;  // admissible range of R'(z_j)
    if (zj == 0.0) {
      lo = -lb, hi = lb;
    } else if (std::abs(zj) < b) {
      lo = hi = zj > 0.0 ? lb : -lb;
    } else if (std::abs(zj) == b) {
      lo = zj > 0.0 ? 0.0 : -lb;
      hi = zj > 0.0 ? lb : 0.0;
    } else {
      lo = hi = 0.0;
    }
    const double pick = std::min(hi, std::max(lo, -g[j]));
    const double r = g[j] + pick;
    acc += r * r;
  }
  return std::sqrt(acc);
}

inline double local_solution_residual(const ProblemInstance& inst,
                                      const SparseCode& z, double b) {
  return local_solution_residual(inst.dict.atoms, inst.signal.values,
                                 inst.lambda, z, b);
}

// ============================================================================
// Feasible cap interval
// ============================================================================

struct BInterval {
  double b_max = kInf;            // the interval is (0, b_max)
  std::array<double, 4> terms{};  // the four constituent caps
  bool empty() const { return !(b_max > 0.0); }
};

namespace detail {

/// min over the support of |z_j| (+inf when empty).
inline double min_support_magnitude(const SparseCode& z) {
  double out = kInf;
  for (Index j : z.support) out = std::min(out, std::abs(z.values[j]));
  return out;
}

/// lambda / max_{j off support} |grad_j| (+inf when the support is full
/// or every off-support gradient vanishes).
inline double off_support_gradient_cap(const Matrix& d, const Vector& x,
                                       double lambda, const SparseCode& z) {
  const Vector g = quadratic_gradient(d, x, z.values);
  double worst = 0.0;
  std::size_t si = 0;
  for (Index j = 0; j < z.size(); ++j) {
    if (si < z.support.size() && z.support[si] == j) {
      ++si;
      continue;
    }
    worst = std::max(worst, std::abs(g[j]));
  }
  return worst == 0.0 ? kInf : lambda / worst;
}

/// The relaxed off-support cap max_k lambda / (grad_k - lambda)_+ used by
/// the sketched/reduced certificates (lambda/0 := +inf, so any coordinate
/// with grad_k <= lambda makes the cap vacuous).
inline double relaxed_off_support_cap(const Matrix& d, const Vector& x,
                                      double lambda, const SparseCode& z) {
  const Vector g = quadratic_gradient(d, x, z.values);
  double best = 0.0;
  bool any = false;
  std::size_t si = 0;
  for (Index j = 0; j < z.size(); ++j) {
    if (si < z.support.size() && z.support[si] == j) {
      ++si;
      continue;
    }
    any = true;
    const double denom = std::max(0.0, g[j] - lambda);
    best = std::max(best, denom == 0.0 ? kInf : lambda / denom);
  }
  return any ? best : kInf;
}

}  // namespace detail

/// Interval (0, b_max) of caps b for which the capped-l1 certificates tie
/// the solver output zhat and the oracle optimum zstar together:
/// b_max = min over { min |zhat_j| on its support, lambda/max off-support
/// |grad(zhat)|, and the same two terms at zstar }.
inline BInterval b_feasible_interval(const ProblemInstance& inst,
                                     const SparseCode& zhat,
                                     const SparseCode& zstar) {
  BInterval out;
  const Matrix& d = inst.dict.atoms;
  const Vector& x = inst.signal.values;
  out.terms = {detail::min_support_magnitude(zhat),
               detail::off_support_gradient_cap(d, x, inst.lambda, zhat),
               detail::min_support_magnitude(zstar),
               detail::off_support_gradient_cap(d, x, inst.lambda, zstar)};
  out.b_max = std::min(std::min(out.terms[0], out.terms[1]),
                       std::min(out.terms[2], out.terms[3]));
  return out;
}

// ============================================================================
// Certificates
// ============================================================================

struct BoundCertificate {
  std::string kind;
  double bound_value = kInf;
  double actual_gap = 0.0;
  bool assumptions_ok = false;
  /// Deterministic certificates must hold whenever binding; probabilistic
  /// ones (the reduced-problem statistical bounds) may fail with
  /// probability at most `delta`.
  bool probabilistic = false;
  double delta = 0.0;
  double kappa0 = 0.0;  // smallest (nonzero-convention) singular value used
  double slack = 0.0;   // the kappa-style slack in the evaluated bound
  double b = 0.0;       // capped-l1 cap the certificate was evaluated at
  Support difference;   // index set the bound sums over
  std::map<std::string, bool> flags;
  std::map<std::string, double> details;

  bool violated(double tol = 1e-9) const {
    return assumptions_ok && !(actual_gap <= bound_value + tol);
  }
};

struct PgdGapParams {
  double kappa = std::numeric_limits<double>::quiet_NaN();  // default k0^2/2
  double b = std::numeric_limits<double>::quiet_NaN();      // default bmax/2
};

namespace detail {

inline double theta_sq(double t, double kappa, double lambda, double b) {
  const double v = degree_of_nonconvexity(t, kappa, lambda, b).value;
  return v * v;
}

/// sum over (diff ∩ supp(z)) of theta(z_j)^2 plus |diff \ supp(z)| copies
/// of theta(0)^2.
inline double theta_numerator(const SparseCode& z, const Support& diff,
                              double kappa, double lambda, double b) {
  double acc = 0.0;
  for (Index j : diff) {
    acc += theta_sq(z.values[j], kappa, lambda, b);
  }
  return acc;
}

struct SubmatrixSpectrum {
  double smallest_raw = 0.0;
  double smallest_nonzero = 0.0;
  bool full_rank = false;
  bool empty = true;
};

inline SubmatrixSpectrum submatrix_spectrum(const Matrix& d,
                                            const Support& cols_set) {
  SubmatrixSpectrum out;
  if (cols_set.empty()) return out;
  out.empty = false;
  const Vector sv = singular_values(columns(d, cols_set));
  out.smallest_raw = sv[sv.size() - 1];
  out.smallest_nonzero = sigma_min_nonzero(sv);
  out.full_rank = sv[0] > 0.0 && out.smallest_raw > 1e-10 * sv[0];
  if (Index(cols_set.size()) > d.rows()) out.full_rank = false;
  return out;
}

}  // namespace detail

/// Certificate for the gap between a PGD output zhat and a global optimum
/// zstar:
///   ||zhat - zstar|| <= sqrt( sum_{j in F, zhat_j != 0} theta(zhat_j)^2
///                           + sum_{j in F, zhat_j = 0} theta(0)^2 )
///                       / (2 kappa0^2 - kappa),
/// F the support symmetric difference and kappa0 the smallest singular
/// value of the union subdictionary.  Hypotheses are individually flagged;
/// the bound is still evaluated when arithmetic permits so non-binding
/// certificates remain inspectable.
inline BoundCertificate pgd_gap_certificate(const ProblemInstance& inst,
                                            const SparseCode& zhat,
                                            const SparseCode& zstar,
                                            const PgdGapParams& params = {}) {
  BoundCertificate cert;
  cert.kind = "pgd_gap";
  cert.actual_gap = (zhat.values - zstar.values).norm();
  cert.difference = support_symmetric_difference(zhat.support, zstar.support);

  const Support uni = support_union(zhat.support, zstar.support);
  const auto spec = detail::submatrix_spectrum(inst.dict.atoms, uni);
  if (spec.empty) {
    // Both codes are zero: the gap is zero and the bound degenerates to 0.
    cert.bound_value = 0.0;
    cert.kappa0 = kInf;
    cert.b = std::isnan(params.b) ? 1.0 : params.b;
    cert.flags["union_full_rank"] = true;
    cert.flags["kappa_admissible"] = true;
    cert.flags["denominator_positive"] = true;
    cert.flags["b_in_interval"] = true;
    cert.flags["zhat_local_solution"] = true;
    cert.flags["zstar_local_solution"] = true;
    cert.assumptions_ok = true;
    return cert;
  }
  cert.kappa0 = spec.smallest_nonzero;
  const double kappa =
      std::isnan(params.kappa) ? 0.5 * cert.kappa0 * cert.kappa0 : params.kappa;
  cert.slack = kappa;

  const BInterval interval = b_feasible_interval(inst, zhat, zstar);
  cert.b = std::isnan(params.b)
               ? (std::isfinite(interval.b_max) ? 0.5 * interval.b_max : 1.0)
               : params.b;

  cert.flags["union_full_rank"] = spec.full_rank;
  cert.flags["kappa_admissible"] =
      kappa > 0.0 && kappa < spec.smallest_raw * spec.smallest_raw;
  const double denom = 2.0 * cert.kappa0 * cert.kappa0 - kappa;
  cert.flags["denominator_positive"] = denom > 0.0;
  cert.flags["b_in_interval"] =
      cert.b > 0.0 && std::isfinite(cert.b) && cert.b < interval.b_max;

  const double lsr_hat = local_solution_residual(inst, zhat, cert.b);
  const double lsr_star = local_solution_residual(inst, zstar, cert.b);
  cert.flags["zhat_local_solution"] = lsr_hat <= 1e-6;
  cert.flags["zstar_local_solution"] = lsr_star <= 1e-6;

  const double num =
      detail::theta_numerator(zhat, cert.difference, kappa, inst.lambda, cert.b);
  cert.bound_value = denom > 0.0 ? std::sqrt(num) / denom : kInf;

  cert.details["b_max"] = interval.b_max;
  cert.details["numerator"] = num;
  cert.details["zhat_residual"] = lsr_hat;
  cert.details["zstar_residual"] = lsr_star;
  cert.details["kappa0_raw"] = spec.smallest_raw;

  cert.assumptions_ok = true;
  for (const auto& [name, ok] : cert.flags) cert.assumptions_ok &= ok;
  return cert;
}

// ============================================================================
// Range-finder error constant
// ============================================================================

/// Spectral-error constant of the Gaussian range finder: with k0 >= 2 and
/// oversampling p = k - k0 >= 4,
///   C = (1 + 17 sqrt(1 + k0/p)) sigma_{k0+1}
///     + (8 sqrt(k)/(p+1)) sqrt(sum_{j > k0} sigma_j^2),
/// and ||D - Q Q^T D|| <= C holds with probability at least 1 - 6 e^{-p}.
inline double range_finder_error_constant(const Vector& sigma, Index k,
                                          Index k0) {
  if (k0 < 2) {
    throw HypothesisError("range_finder_error_constant: k0 must be >= 2");
  }
  const Index p = k - k0;
  if (p < 4) {
    throw HypothesisError(
        "range_finder_error_constant: oversampling k - k0 must be >= 4");
  }
  const double next = k0 < sigma.size() ? sigma[k0] : 0.0;  // sigma_{k0+1}
  double tail = 0.0;
  for (Index j = k0; j < sigma.size(); ++j) tail += sigma[j] * sigma[j];
  return (1.0 + 17.0 * std::sqrt(1.0 + double(k0) / double(p))) * next +
         (8.0 * std::sqrt(double(k)) / double(p + 1)) * std::sqrt(tail);
}

inline double range_finder_error_constant(const Matrix& d, Index k, Index k0) {
  return range_finder_error_constant(singular_values(d), k, k0);
}

// ============================================================================
// Sketched / reduced certificates
// ============================================================================

struct GapCertificates {
  BoundCertificate solver_vs_oracle;  // solver code vs reduced-problem optimum
  BoundCertificate optimal;           // reduced optimum vs original optimum
  BoundCertificate suboptimal;        // solver code vs original optimum
  double b1 = 0.0;                    // solver-vs-oracle bound value
  double b2 = 0.0;                    // reduced-vs-original bound value
};

struct RmaBoundParams {
  double kappa = std::numeric_limits<double>::quiet_NaN();      // kappa0^2/2
  double tau_bound = std::numeric_limits<double>::quiet_NaN();  // tau0^2
  double b = std::numeric_limits<double>::quiet_NaN();          // joint/2
  Index k0 = -1;                                                // max(2, k-4)
};

namespace detail {

struct PairProblem {
  const Matrix& d;
  const Vector& x;
  double lambda;
};

/// Gap certificate of the generic shape
/// sqrt(theta-numerator + extra)/(2 sigma^2 - slack) between two codes of
/// (possibly different) problems, with all flags filled in by the caller.
inline void fill_theta_bound(BoundCertificate& cert, const SparseCode& lead,
                             const Support& diff, double lambda,
                             double sigma_small_raw, double sigma_small,
                             double slack, double b, double additive) {
  cert.kappa0 = sigma_small;
  cert.slack = slack;
  cert.b = b;
  cert.difference = diff;
  const double denom = 2.0 * sigma_small * sigma_small - slack;
  cert.flags["slack_admissible"] =
      slack > 0.0 && slack < 2.0 * sigma_small_raw * sigma_small_raw;
  cert.flags["denominator_positive"] = denom > 0.0;
  const double num = theta_numerator(lead, diff, slack, lambda, b);
  cert.details["numerator"] = num;
  cert.details["additive"] = additive;
  cert.bound_value =
      denom > 0.0 ? (std::sqrt(num) + additive) / denom : kInf;
}

}  // namespace detail

/// Certificates tying together the rank-sketched PGD output `zhat`, the
/// sketched problem's global optimum `ztilde`, and the original problem's
/// global optimum `zstar`:
///   solver_vs_oracle: ||zhat - ztilde||    vs the reduced-problem bound b1
///   optimal:          ||ztilde - zstar||   vs the sketching bound b2
///   suboptimal:       ||zhat - zstar||     vs b1 + b2.
/// b2's additive part is 2 C M0 (2 sigma_max(D) + C) + 2 C ||x|| with C
/// the range-finder error constant and M0 = (||x|| + sqrt(L~(z0)))/tau0;
/// its hypotheses therefore include the spectral event ||D - D~|| <= C,
/// checked exactly (the certificates are conditioned on the draw).
inline GapCertificates rma_gap_bounds(const ProblemInstance& inst,
                                      const SketchedDictionary& sketch,
                                      const SparseCode& zhat,
                                      const SparseCode& ztilde,
                                      const SparseCode& zstar,
                                      const SparseCode& init,
                                      const RmaBoundParams& params = {}) {
  GapCertificates out;
  const Matrix& d = inst.dict.atoms;
  const Vector& x = inst.signal.values;
  const double lambda = inst.lambda;
  const Matrix dt = sketch.q * sketch.w;  // explicit D~ (certificate scale)

  // --- cap selection -------------------------------------------------------
  // The joint feasible interval: the solver-vs-oracle part needs the
  // off-support-gradient caps of both reduced-problem points, while the
  // reduced-vs-original part states its caps in the relaxed
  // lambda/(g - lambda)_+ form for ztilde (reduced) and zstar (original);
  // each part keeps its own form.
  const double relax_tld =
      detail::relaxed_off_support_cap(dt, x, lambda, ztilde);
  const double relax_str = detail::relaxed_off_support_cap(d, x, lambda, zstar);
  const double mag_hat = detail::min_support_magnitude(zhat);
  const double mag_tld = detail::min_support_magnitude(ztilde);
  const double mag_str = detail::min_support_magnitude(zstar);
  const double pair_hat = detail::off_support_gradient_cap(dt, x, lambda, zhat);
  const double pair_tld =
      detail::off_support_gradient_cap(dt, x, lambda, ztilde);
  const double joint = std::min({mag_hat, pair_hat, mag_tld, pair_tld,
                                 relax_tld, mag_str, relax_str});
  const double b = std::isnan(params.b)
                       ? (std::isfinite(joint) ? 0.5 * joint : 1.0)
                       : params.b;

  const double lsr_hat = local_solution_residual(dt, x, lambda, zhat, b);
  const double lsr_tld = local_solution_residual(dt, x, lambda, ztilde, b);
  const double lsr_str = local_solution_residual(d, x, lambda, zstar, b);

  // --- b1: solver vs reduced-problem oracle (both live on D~) --------------
  {
    BoundCertificate& cert = out.solver_vs_oracle;
    cert.kind = "rma_solver_gap";
    cert.actual_gap = (zhat.values - ztilde.values).norm();
    const Support uni = support_union(zhat.support, ztilde.support);
    const auto spec = detail::submatrix_spectrum(dt, uni);
    const double kappa0 = spec.empty ? kInf : spec.smallest_nonzero;
    const double kappa = std::isnan(params.kappa)
                             ? (spec.empty ? 1.0 : 0.5 * kappa0 * kappa0)
                             : params.kappa;
    if (spec.empty) {
      cert.bound_value = 0.0;
      cert.kappa0 = kInf;
      cert.b = b;
      cert.flags["union_full_rank"] = true;
      cert.flags["slack_admissible"] = true;
      cert.flags["denominator_positive"] = true;
    } else {
      detail::fill_theta_bound(
          cert, zhat,
          support_symmetric_difference(zhat.support, ztilde.support), lambda,
          spec.smallest_raw, kappa0, kappa, b, 0.0);
      cert.flags["slack_admissible"] =
          kappa > 0.0 && kappa < spec.smallest_raw * spec.smallest_raw;
      cert.flags["union_full_rank"] = spec.full_rank;
    }
    cert.flags["b_in_interval"] =
        b > 0.0 && std::isfinite(b) &&
        b < std::min({mag_hat, mag_tld, pair_hat, pair_tld});
    cert.flags["zhat_local_solution"] = lsr_hat <= 1e-6;
    cert.flags["ztilde_local_solution"] = lsr_tld <= 1e-6;
    cert.details["zhat_residual"] = lsr_hat;
    cert.details["ztilde_residual"] = lsr_tld;
    cert.assumptions_ok = true;
    for (const auto& [name, ok] : cert.flags) cert.assumptions_ok &= ok;
    out.b1 = cert.bound_value;
  }

  // --- b2: reduced optimum vs original optimum -----------------------------
  double b2_additive = kInf;
  std::map<std::string, bool> b2_flags;
  std::map<std::string, double> b2_details;
  const Support g_union = support_union(ztilde.support, zstar.support);
  const auto gspec = detail::submatrix_spectrum(d, g_union);
  const double tau0 = gspec.empty ? kInf : gspec.smallest_nonzero;
  const double tau_bound = std::isnan(params.tau_bound)
                               ? (gspec.empty ? 1.0 : tau0 * tau0)
                               : params.tau_bound;
  {
    const Index k0 = params.k0 < 0 ? std::max(Index(2), sketch.k - 4) : params.k0;
    bool halko_ok = k0 >= 2 && sketch.k - k0 >= 4;
    double error_constant = kInf;
    if (halko_ok) {
      error_constant = range_finder_error_constant(d, sketch.k, k0);
    }
    b2_flags["error_constant_defined"] = halko_ok;
    const double spectral_actual = sigma_max(d - dt);
    b2_flags["spectral_event"] = spectral_actual <= error_constant;

    const double init_obj =
        (x - dt * init.values).squaredNorm() + lambda * init.support_size();
    const double m0 =
        tau0 > 0.0 && std::isfinite(tau0)
            ? (x.norm() + std::sqrt(init_obj)) / tau0
            : kInf;
    b2_flags["reduced_norm_dominated"] =
        ztilde.values.norm() <= m0 * (1.0 + 1e-12);
    b2_flags["union_full_rank"] = gspec.empty ? true : gspec.full_rank;
    b2_flags["b_in_interval"] =
        b > 0.0 && std::isfinite(b) &&
        b < std::min({mag_tld, relax_tld, mag_str, relax_str});

    const double smax = sigma_max(d);
    if (std::isfinite(error_constant) && std::isfinite(m0)) {
      b2_additive = 2.0 * error_constant * m0 * (2.0 * smax + error_constant) +
                    2.0 * error_constant * x.norm();
    }
    b2_details["error_constant"] = error_constant;
    b2_details["spectral_actual"] = spectral_actual;
    b2_details["m0"] = m0;
    b2_details["zstar_residual"] = lsr_str;
    b2_details["ztilde_residual"] = lsr_tld;
  }
  {
    BoundCertificate& cert = out.optimal;
    cert.kind = "rma_optimal_gap";
    cert.actual_gap = (ztilde.values - zstar.values).norm();
    if (gspec.empty) {
      cert.bound_value = std::isfinite(b2_additive) ? b2_additive : kInf;
      cert.kappa0 = kInf;
      cert.b = b;
      cert.flags["slack_admissible"] = true;
      cert.flags["denominator_positive"] = true;
    } else {
      detail::fill_theta_bound(cert, ztilde, g_union, lambda,
                               gspec.smallest_raw, tau0, tau_bound, b,
                               b2_additive);
    }
    for (const auto& [name, ok] : b2_flags) cert.flags[name] = ok;
    for (const auto& [name, v] : b2_details) cert.details[name] = v;
    cert.assumptions_ok = true;
    for (const auto& [name, ok] : cert.flags) cert.assumptions_ok &= ok;
    out.b2 = cert.bound_value;
  }
  {
    BoundCertificate& cert = out.suboptimal;
    cert.kind = "rma_suboptimal_gap";
    cert.actual_gap = (zhat.values - zstar.values).norm();
    cert.bound_value = out.b1 + out.b2;
    cert.kappa0 = out.solver_vs_oracle.kappa0;
    cert.slack = out.solver_vs_oracle.slack;
    cert.b = b;
    cert.difference =
        support_symmetric_difference(zhat.support, zstar.support);
    for (const auto& [name, ok] : out.solver_vs_oracle.flags) {
      cert.flags["solver_" + name] = ok;
    }
    for (const auto& [name, ok] : out.optimal.flags) {
      cert.flags["sketch_" + name] = ok;
    }
    cert.details["b1"] = out.b1;
    cert.details["b2"] = out.b2;
    cert.assumptions_ok =
        out.solver_vs_oracle.assumptions_ok && out.optimal.assumptions_ok;
  }
  return out;
}

struct RdrBoundParams {
  double kappa = std::numeric_limits<double>::quiet_NaN();      // kappa0^2/2
  double eta_bound = std::numeric_limits<double>::quiet_NaN();  // eta0^2
  double b = std::numeric_limits<double>::quiet_NaN();          // joint/2
  double c = 1.0;                                               // JL constant
  double delta = 0.1;
};

/// Certificates for the dimension-reduced pipeline, tying the reduced PGD
/// output `zhat`, the reduced problem's optimum `zbar`, and the original
/// optimum `zstar`.  The statistical part of b2 is
///   2 ||D||_F M1 sqrt((c/m) log(4/delta)) (sigma_max(D) + 1),
/// M1 = (||x|| + sqrt(Lbar(z0)))/eta0, valid with probability >= 1 - delta
/// once m >= 4 c log(4/delta); `optimal` and `suboptimal` are therefore
/// probabilistic certificates, while `solver_vs_oracle` (a reduced-problem
/// statement) stays deterministic.
inline GapCertificates rdr_gap_bounds(const ProblemInstance& inst,
                                      const ReducedInstance& red,
                                      const SparseCode& zhat,
                                      const SparseCode& zbar,
                                      const SparseCode& zstar,
                                      const SparseCode& init,
                                      const RdrBoundParams& params = {}) {
  GapCertificates out;
  const Matrix& d = inst.dict.atoms;
  const Vector& x = inst.signal.values;
  const Matrix& db = red.reduced.dict.atoms;   // TD
  const Vector& xb = red.reduced.signal.values;  // Tx
  const double lambda = inst.lambda;
  const Index m = red.transform.reduced_dim;

  // --- cap selection (same joint-interval structure as the rank-sketch
  // certificates, with the reduced problem playing the sketched role) ------
  const double relax_bar =
      detail::relaxed_off_support_cap(db, xb, lambda, zbar);
  const double relax_str = detail::relaxed_off_support_cap(d, x, lambda, zstar);
  const double mag_hat = detail::min_support_magnitude(zhat);
  const double mag_bar = detail::min_support_magnitude(zbar);
  const double mag_str = detail::min_support_magnitude(zstar);
  const double pair_hat =
      detail::off_support_gradient_cap(db, xb, lambda, zhat);
  const double pair_bar =
      detail::off_support_gradient_cap(db, xb, lambda, zbar);
  const double joint = std::min({mag_hat, pair_hat, mag_bar, pair_bar,
                                 relax_bar, mag_str, relax_str});
  const double b = std::isnan(params.b)
                       ? (std::isfinite(joint) ? 0.5 * joint : 1.0)
                       : params.b;

  const double lsr_hat = local_solution_residual(db, xb, lambda, zhat, b);
  const double lsr_bar = local_solution_residual(db, xb, lambda, zbar, b);
  const double lsr_str = local_solution_residual(d, x, lambda, zstar, b);

  // --- b1: solver vs reduced oracle (deterministic) ------------------------
  {
    BoundCertificate& cert = out.solver_vs_oracle;
    cert.kind = "rdr_solver_gap";
    cert.actual_gap = (zhat.values - zbar.values).norm();
    const Support uni = support_union(zhat.support, zbar.support);
    const auto spec = detail::submatrix_spectrum(db, uni);
    const double kappa0 = spec.empty ? kInf : spec.smallest_nonzero;
    const double kappa = std::isnan(params.kappa)
                             ? (spec.empty ? 1.0 : 0.5 * kappa0 * kappa0)
                             : params.kappa;
    if (spec.empty) {
      cert.bound_value = 0.0;
      cert.kappa0 = kInf;
      cert.b = b;
      cert.flags["union_full_rank"] = true;
      cert.flags["slack_admissible"] = true;
      cert.flags["denominator_positive"] = true;
    } else {
      detail::fill_theta_bound(
          cert, zhat,
          support_symmetric_difference(zhat.support, zbar.support), lambda,
          spec.smallest_raw, kappa0, kappa, b, 0.0);
      cert.flags["slack_admissible"] =
          kappa > 0.0 && kappa < spec.smallest_raw * spec.smallest_raw;
      cert.flags["union_full_rank"] = spec.full_rank;
    }
    cert.flags["b_in_interval"] =
        b > 0.0 && std::isfinite(b) &&
        b < std::min({mag_hat, mag_bar, pair_hat, pair_bar});
    cert.flags["zhat_local_solution"] = lsr_hat <= 1e-6;
    cert.flags["zbar_local_solution"] = lsr_bar <= 1e-6;
    cert.details["zhat_residual"] = lsr_hat;
    cert.details["zbar_residual"] = lsr_bar;
    cert.assumptions_ok = true;
    for (const auto& [name, ok] : cert.flags) cert.assumptions_ok &= ok;
    out.b1 = cert.bound_value;
  }

  // --- b2: reduced optimum vs original optimum (statistical) ---------------
  const Support h_union = support_union(zbar.support, zstar.support);
  const auto hspec = detail::submatrix_spectrum(d, h_union);
  const double eta0 = hspec.empty ? kInf : hspec.smallest_nonzero;
  const double eta_bound = std::isnan(params.eta_bound)
                               ? (hspec.empty ? 1.0 : eta0 * eta0)
                               : params.eta_bound;
  double statistical = kInf;
  std::map<std::string, bool> b2_flags;
  std::map<std::string, double> b2_details;
  {
    const double log_term = std::log(4.0 / params.delta);
    b2_flags["m_large_enough"] = double(m) >= 4.0 * params.c * log_term;
    const double init_obj = (xb - db * init.values).squaredNorm() +
                            lambda * init.support_size();
    const double m1 = eta0 > 0.0 && std::isfinite(eta0)
                          ? (x.norm() + std::sqrt(init_obj)) / eta0
                          : kInf;
    b2_flags["reduced_norm_dominated"] =
        zbar.values.norm() <= m1 * (1.0 + 1e-12);
    b2_flags["union_full_rank"] = hspec.empty ? true : hspec.full_rank;
    b2_flags["b_in_interval"] =
        b > 0.0 && std::isfinite(b) &&
        b < std::min({mag_bar, relax_bar, mag_str, relax_str});
    if (std::isfinite(m1)) {
      statistical = 2.0 * d.norm() * m1 *
                    std::sqrt((params.c / double(m)) * log_term) *
                    (sigma_max(d) + 1.0);
    }
    b2_details["statistical_term"] = statistical;
    b2_details["m1"] = m1;
    b2_details["zstar_residual"] = lsr_str;
    b2_details["zbar_residual"] = lsr_bar;
    // Diagnostic: did the concentration event the proof relies on occur?
    b2_details["event_residual"] =
        local_solution_residual(d, x, lambda, zbar, b);
  }
  {
    BoundCertificate& cert = out.optimal;
    cert.kind = "rdr_optimal_gap";
    cert.actual_gap = (zbar.values - zstar.values).norm();
    cert.probabilistic = true;
    cert.delta = params.delta;
    if (hspec.empty) {
      cert.bound_value = std::isfinite(statistical) ? statistical : kInf;
      cert.kappa0 = kInf;
      cert.b = b;
      cert.flags["slack_admissible"] = true;
      cert.flags["denominator_positive"] = true;
    } else {
      detail::fill_theta_bound(cert, zbar, h_union, lambda,
                               hspec.smallest_raw, eta0, eta_bound, b,
                               statistical);
    }
    for (const auto& [name, ok] : b2_flags) cert.flags[name] = ok;
    for (const auto& [name, v] : b2_details) cert.details[name] = v;
    cert.assumptions_ok = true;
    for (const auto& [name, ok] : cert.flags) cert.assumptions_ok &= ok;
    out.b2 = cert.bound_value;
  }
  {
    BoundCertificate& cert = out.suboptimal;
    cert.kind = "rdr_suboptimal_gap";
    cert.actual_gap = (zhat.values - zstar.values).norm();
    cert.bound_value = out.b1 + out.b2;
    cert.probabilistic = true;
    cert.delta = params.delta;
    cert.kappa0 = out.solver_vs_oracle.kappa0;
    cert.slack = out.solver_vs_oracle.slack;
    cert.b = b;
    cert.difference =
        support_symmetric_difference(zhat.support, zstar.support);
    for (const auto& [name, ok] : out.solver_vs_oracle.flags) {
      cert.flags["solver_" + name] = ok;
    }
    for (const auto& [name, ok] : out.optimal.flags) {
      cert.flags["reduction_" + name] = ok;
    }
    cert.details["b1"] = out.b1;
    cert.details["b2"] = out.b2;
    cert.assumptions_ok =
        out.solver_vs_oracle.assumptions_ok && out.optimal.assumptions_ok;
  }
  return out;
}

// ============================================================================
// Sparse extremal eigenvalues
// ============================================================================

struct SparseSpectrum {
  double lower = kInf;  // min over |S| = m of sigma_min(D_S)^2
  double upper = 0.0;   // max over |S| = m of sigma_max(D_S)^2
};

/// Extremal m-sparse eigenvalues of D^T D by exhaustive enumeration of
/// all supports of size m.  Refuses n > 20.
inline SparseSpectrum sparse_eigenvalues(const Matrix& d, Index m) {
  const Index n = d.cols();
  if (n > 20) {
    throw RefuseEnumeration("sparse_eigenvalues: " + std::to_string(n) +
                            " atoms exceed the enumeration limit of 20");
  }
  if (m < 1 || m > n) {
    throw ConfigError("sparse_eigenvalues: m must lie in [1, n]");
  }
  SparseSpectrum out;
  const std::uint32_t limit = std::uint32_t(1) << n;
  for (std::uint32_t mask = 0; mask < limit; ++mask) {
    if (std::popcount(mask) != int(m)) continue;
    Support support;
    for (Index j = 0; j < n; ++j) {
      if (mask & (std::uint32_t(1) << j)) support.push_back(j);
    }
    const Vector sv = singular_values(columns(d, support));
    out.upper = std::max(out.upper, sv[0] * sv[0]);
    const double low = m > d.rows() ? 0.0 : sv[sv.size() - 1];
    out.lower = std::min(out.lower, low * low);
  }
  return out;
}

// ============================================================================
// Product-projection concentration check
// ============================================================================

struct ProductProjectionCheck {
  Index trials = 0;
  Index failures = 0;
  double failure_rate = 0.0;
  double rhs = 0.0;  // the concentration threshold
};

/// Monte-Carlo check of the projected-product concentration: for
/// T an m x d JL map, ||A T^T T B - A B||_2 should stay below
/// ||A||_F ||B||_F sqrt((c/m) log(4/delta)) except with probability delta.
/// Requires m >= 4 c log(4/delta).  Spectral norms by power iteration.
inline ProductProjectionCheck product_projection_check(
    const Matrix& a, const Matrix& bmat, Index m, JlDistribution dist,
    double c, double delta, Index trials, std::uint64_t seed) {
  if (a.cols() != bmat.rows()) {
    throw DimensionError("product_projection_check: inner dimensions differ");
  }
  if (!(c > 0.0) || !(delta > 0.0) || !(delta < 1.0)) {
    throw ConfigError("product_projection_check: need c > 0, 0 < delta < 1");
  }
  if (trials < 1) {
    throw ConfigError("product_projection_check: trials must be >= 1");
  }
  const double log_term = std::log(4.0 / delta);
  if (double(m) < 4.0 * c * log_term) {
    throw HypothesisError(
        "product_projection_check: m must be at least 4 c log(4/delta)");
  }
  ProductProjectionCheck out;
  out.trials = trials;
  out.rhs = a.norm() * bmat.norm() * std::sqrt((c / double(m)) * log_term);
  const Matrix ab = a * bmat;
  const Index d = a.cols();
  for (Index t = 0; t < trials; ++t) {
    const JlTransform jl = sample_jl(m, d, dist, seed + std::uint64_t(t));
    const Matrix err = (a * jl.t.transpose()) * (jl.t * bmat) - ab;
    if (spectral_norm_power(err, 500, 1e-12) > out.rhs) ++out.failures;
  }
  out.failure_rate = double(out.failures) / double(out.trials);
  return out;
}

}  // namespace l0prox
