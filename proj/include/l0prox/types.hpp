#pragma once

// Value types shared across the library.
//
// A code is "sparse" in the exact sense: entries are either bitwise zero
// or part of the support.  All support reasoning (shrinkage checks,
// symmetric differences, l0 counts) is set arithmetic on exact zeros --
// there is no epsilon-thresholding hidden in the representation.

#include <Eigen/Dense>
#include <algorithm>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "l0prox/errors.hpp"

namespace l0prox {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

// ============================================================================
// Dictionary and signal
// ============================================================================

/// Dense dictionary, one atom per column.  Zero columns are legal but
/// recorded so callers can surface a warning.
struct Dictionary {
  Matrix atoms;                      // d x n
  std::vector<Index> zero_columns;   // indices of exactly-zero atoms

  Dictionary() = default;
  explicit Dictionary(Matrix m) : atoms(std::move(m)) {
    if (!atoms.allFinite()) {
      throw InvalidData("Dictionary: non-finite entries");
    }
    for (Index j = 0; j < atoms.cols(); ++j) {
      if (atoms.col(j).norm() == 0.0) zero_columns.push_back(j);
    }
  }

  Index dim() const { return atoms.rows(); }    // ambient dimension d
  Index size() const { return atoms.cols(); }   // number of atoms n
};

struct Signal {
  Vector values;

  Signal() = default;
  explicit Signal(Vector v) : values(std::move(v)) {
    if (!values.allFinite()) {
      throw InvalidData("Signal: non-finite entries");
    }
  }

  Index dim() const { return values.size(); }
};

// ============================================================================
// Sparse codes and support arithmetic
// ============================================================================

using Support = std::vector<Index>;  // sorted, duplicate-free

struct SparseCode {
  Vector values;     // exact zeros off the support
  Support support;   // sorted indices of the bitwise-nonzero entries

  static SparseCode from_values(Vector v) {
    if (!v.allFinite()) throw InvalidData("SparseCode: non-finite entries");
    SparseCode code;
    code.values = std::move(v);
    for (Index j = 0; j < code.values.size(); ++j) {
      if (code.values[j] != 0.0) code.support.push_back(j);
    }
    return code;
  }

  static SparseCode zeros(Index n) {
    SparseCode code;
    code.values = Vector::Zero(n);
    return code;
  }

  Index size() const { return values.size(); }
  Index support_size() const { return Index(support.size()); }
  double norm() const { return values.norm(); }
};

inline Support support_union(const Support& a, const Support& b) {
  Support out;
  std::set_union(a.begin(), a.end(), b.begin(), b.end(),
                 std::back_inserter(out));
  return out;
}

inline Support support_difference(const Support& a, const Support& b) {
  Support out;
  std::set_difference(a.begin(), a.end(), b.begin(), b.end(),
                      std::back_inserter(out));
  return out;
}

inline Support support_intersection(const Support& a, const Support& b) {
  Support out;
  std::set_intersection(a.begin(), a.end(), b.begin(), b.end(),
                        std::back_inserter(out));
  return out;
}

inline Support support_symmetric_difference(const Support& a,
                                            const Support& b) {
  Support out;
  std::set_symmetric_difference(a.begin(), a.end(), b.begin(), b.end(),
                                std::back_inserter(out));
  return out;
}

inline bool support_subset(const Support& inner, const Support& outer) {
  return std::includes(outer.begin(), outer.end(), inner.begin(), inner.end());
}

/// Columns of `m` selected by a support, in support order.
inline Matrix columns(const Matrix& m, const Support& s) {
  Matrix out(m.rows(), Index(s.size()));
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] < 0 || s[i] >= m.cols()) {
      throw DimensionError("columns: support index out of range");
    }
    out.col(Index(i)) = m.col(s[i]);
  }
  return out;
}

// ============================================================================
// Problem instance
// ============================================================================

/// A scaled l0-penalised least-squares problem
///     min_z ||x - D z||_2^2 + lambda ||z||_0,  threshold inflation tau > 1.
/// Instances produced by normalize_instance satisfy max_j ||D_j|| <= 1 and
/// ||x|| <= 1; `code_scale` maps codes of this problem back to codes for
/// the raw (unscaled) data.
struct ProblemInstance {
  Dictionary dict;
  Signal signal;
  double lambda = 0.0;
  double tau = 1.1;
  double code_scale = 1.0;      // raw code = scaled code * code_scale
  double dict_scale = 1.0;      // D_scaled = D_raw / dict_scale
  double signal_scale = 1.0;    // x_scaled = x_raw / signal_scale

  Index dim() const { return dict.dim(); }
  Index atoms() const { return dict.size(); }
};

/// One row of a solve trace.
struct IterationRecord {
  Index t = 0;             // iteration index, 0 = initial point
  double objective = 0.0;  // problem objective at the iterate
  Index support_size = 0;
  double step_norm = 0.0;  // ||z_t - z_{t-1}||_2, 0 at t = 0
};

}  // namespace l0prox
