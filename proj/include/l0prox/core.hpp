#pragma once

// Problem construction and the shared linear-algebra plumbing.

#include <Eigen/Dense>
#include <cmath>
#include <functional>
#include <utility>

#include "l0prox/errors.hpp"
#include "l0prox/types.hpp"

namespace l0prox {

// ============================================================================
// Instance scaling
// ============================================================================

/// Build a solver-ready instance from raw data.  The dictionary is scaled
/// by 1/max(1, max column norm * (1 + 1e-9)) and the signal by
/// 1/max(1, ||x||), so the scaled data satisfy max_j ||D_j|| <= 1 and
/// ||x|| <= 1 (the scaling every guarantee in this library assumes).
/// `lambda` applies to the scaled problem as given.
inline ProblemInstance normalize_instance(const Matrix& dict_raw,
                                          const Vector& signal_raw,
                                          double lambda, double tau) {
  if (dict_raw.rows() != signal_raw.size()) {
    throw DimensionError("normalize_instance: dictionary rows != signal size");
  }
  if (!(lambda > 0.0) || !std::isfinite(lambda)) {
    throw ConfigError("normalize_instance: lambda must be positive");
  }
  if (!(tau > 1.0) || !std::isfinite(tau)) {
    throw ConfigError("normalize_instance: tau must exceed 1");
  }
  Dictionary dict_probe(dict_raw);  // validates finiteness, finds zero atoms
  Signal signal_probe(signal_raw);

  double max_col = 0.0;
  for (Index j = 0; j < dict_raw.cols(); ++j) {
    max_col = std::max(max_col, dict_raw.col(j).norm());
  }
  const double dict_scale = std::max(1.0, max_col * (1.0 + 1e-9));
  const double signal_scale = std::max(1.0, signal_raw.norm());

  ProblemInstance inst;
  inst.dict = Dictionary(dict_raw / dict_scale);
  inst.signal = Signal(signal_raw / signal_scale);
  inst.lambda = lambda;
  inst.tau = tau;
  inst.dict_scale = dict_scale;
  inst.signal_scale = signal_scale;
  inst.code_scale = signal_scale / dict_scale;
  return inst;
}

/// Map a code of the scaled problem back to a code for the raw data:
/// if z reconstructs x_scaled from D_scaled then code_scale * z
/// reconstructs x_raw from D_raw with the residual norm scaled by
/// ||x_raw||.  The support is unchanged.
inline SparseCode denormalize_code(const ProblemInstance& inst,
                                   const SparseCode& code) {
  SparseCode out;
  out.values = code.values * inst.code_scale;
  out.support = code.support;  // scaling by a positive factor keeps zeros
  return out;
}

// ============================================================================
// Objective
// ============================================================================

inline double residual_norm(const ProblemInstance& inst,
                            const SparseCode& code) {
  if (code.size() != inst.atoms()) {
    throw DimensionError("residual_norm: code length != number of atoms");
  }
  return (inst.signal.values - inst.dict.atoms * code.values).norm();
}

/// L(z) = ||x - D z||_2^2 + lambda * ||z||_0.
inline double objective(const ProblemInstance& inst, const SparseCode& code) {
  const double r = residual_norm(inst, code);
  return r * r + inst.lambda * double(code.support_size());
}

// ============================================================================
// Decompositions (Eigen-backed, with the conventions pinned here)
// ============================================================================

struct ThinQr {
  Matrix q;             // d x k, orthonormal columns
  Matrix r;             // k x k, upper triangular
  bool rank_deficient;  // true when a diagonal of R (numerically) vanishes
};

/// Thin QR of a d x k matrix, k <= d.  Householder-based, so Q always has
/// exactly orthonormal columns; rank deficiency of the input is flagged
/// rather than breaking orthonormality (the extra columns then span an
/// arbitrary orthonormal complement of the range).
inline ThinQr thin_qr(const Matrix& a) {
  if (a.cols() > a.rows()) {
    throw DimensionError("thin_qr: expected a tall matrix (cols <= rows)");
  }
  if (!a.allFinite()) throw InvalidData("thin_qr: non-finite entries");
  Eigen::HouseholderQR<Matrix> qr(a);
  const Index k = a.cols();
  ThinQr out;
  out.q = qr.householderQ() * Matrix::Identity(a.rows(), k);
  out.r = qr.matrixQR().topRows(k).template triangularView<Eigen::Upper>();
  double max_diag = 0.0, min_diag = std::numeric_limits<double>::infinity();
  for (Index i = 0; i < k; ++i) {
    const double d = std::abs(out.r(i, i));
    max_diag = std::max(max_diag, d);
    min_diag = std::min(min_diag, d);
  }
  out.rank_deficient = (k > 0) && (min_diag <= 1e-12 * max_diag);
  return out;
}

/// Singular values in descending order.
inline Vector singular_values(const Matrix& a) {
  if (!a.allFinite()) throw InvalidData("singular_values: non-finite entries");
  if (a.size() == 0) return Vector(0);
  if (std::min(a.rows(), a.cols()) <= 32) {
    return Eigen::JacobiSVD<Matrix>(a).singularValues();
  }
  return Eigen::BDCSVD<Matrix>(a).singularValues();
}

inline double sigma_max(const Matrix& a) {
  const Vector s = singular_values(a);
  return s.size() == 0 ? 0.0 : s[0];
}

/// Smallest singular value above the relative tolerance 1e-10 * sigma_max
/// (the library-wide "smallest nonzero" convention).  Returns 0 for a
/// (numerically) zero matrix.
inline double sigma_min_nonzero(const Vector& svals) {
  if (svals.size() == 0 || svals[0] == 0.0) return 0.0;
  const double tol = 1e-10 * svals[0];
  double out = 0.0;
  for (Index i = 0; i < svals.size(); ++i) {
    if (svals[i] > tol) out = svals[i];
  }
  return out;
}

inline double sigma_min_nonzero(const Matrix& a) {
  return sigma_min_nonzero(singular_values(a));
}

// ============================================================================
// Least squares on a support
// ============================================================================

struct LeastSquaresResult {
  SparseCode code;      // full-length, zeros off the support
  bool rank_deficient;  // subdictionary numerically rank deficient
};

/// Minimum-norm least-squares fit of the signal on the atoms indexed by
/// `support` (complete orthogonal decomposition, i.e. the pseudo-inverse
/// solution when the subdictionary is rank deficient).
inline LeastSquaresResult least_squares_on_support(const ProblemInstance& inst,
                                                   const Support& support) {
  LeastSquaresResult out;
  out.rank_deficient = false;
  if (support.empty()) {
    out.code = SparseCode::zeros(inst.atoms());
    return out;
  }
  const Matrix sub = columns(inst.dict.atoms, support);
  Eigen::CompleteOrthogonalDecomposition<Matrix> cod(sub);
  cod.setThreshold(1e-12);
  const Vector coeffs = cod.solve(inst.signal.values);
  out.rank_deficient = cod.rank() < Index(support.size());
  Vector full = Vector::Zero(inst.atoms());
  for (std::size_t i = 0; i < support.size(); ++i) {
    full[support[i]] = coeffs[Index(i)];
  }
  out.code = SparseCode::from_values(std::move(full));
  return out;
}

// ============================================================================
// Spectral norm by power iteration
// ============================================================================

/// Largest singular value of the operator given by `apply` (v -> A v) and
/// `apply_adjoint` (u -> A^T u), estimated by power iteration on A^T A
/// from a deterministic start vector.  Converges from below; `iterations`
/// and `tolerance` default to the reporting convention used throughout.
inline double spectral_norm_power(
    const std::function<Vector(const Vector&)>& apply,
    const std::function<Vector(const Vector&)>& apply_adjoint, Index domain,
    int iterations = 100, double tolerance = 1e-8) {
  if (domain <= 0) return 0.0;
  Vector v(domain);
  for (Index i = 0; i < domain; ++i) {
    v[i] = 1.0 + 1e-3 * double(i % 7);  // deterministic, not axis-aligned
  }
  v.normalize();
  double sigma = 0.0;
  for (int it = 0; it < iterations; ++it) {
    Vector w = apply_adjoint(apply(v));
    const double n = w.norm();
    if (n == 0.0) return 0.0;
    const double next = std::sqrt(n);
    v = w / n;
    if (std::abs(next - sigma) <= tolerance * std::max(1.0, next)) {
      return next;
    }
    sigma = next;
  }
  return sigma;
}

inline double spectral_norm_power(const Matrix& a, int iterations = 100,
                                  double tolerance = 1e-8) {
  return spectral_norm_power(
      [&a](const Vector& v) { return Vector(a * v); },
      [&a](const Vector& u) { return Vector(a.transpose() * u); }, a.cols(),
      iterations, tolerance);
}

}  // namespace l0prox
