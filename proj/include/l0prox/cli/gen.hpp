#pragma once

// Synthetic problem generation: dictionaries with controlled spectra or
// iid Gaussian atoms, planted sparse codes, and noisy signals.  The
// builders are reused directly by the verification campaigns, so they
// live here rather than in the subcommand driver.

#include <algorithm>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "l0prox/cli/report.hpp"
#include "l0prox/core.hpp"
#include "l0prox/errors.hpp"
#include "l0prox/rng.hpp"
#include "l0prox/types.hpp"

namespace l0prox {

enum class DictionaryModel { Flat, Geometric, GaussianAtoms };

inline DictionaryModel parse_dictionary_model(const std::string& name) {
  if (name == "flat") return DictionaryModel::Flat;
  if (name == "geometric") return DictionaryModel::Geometric;
  if (name == "gaussian") return DictionaryModel::GaussianAtoms;
  throw ConfigError("unknown dictionary model '" + name +
                    "' (expected flat, geometric, or gaussian)");
}

inline std::string to_string(DictionaryModel model) {
  switch (model) {
    case DictionaryModel::Flat: return "flat";
    case DictionaryModel::Geometric: return "geometric";
    case DictionaryModel::GaussianAtoms: return "gaussian";
  }
  return "?";
}

namespace detail {

inline Matrix gaussian_matrix(Index rows, Index cols, std::uint64_t seed,
                              std::uint64_t stream) {
  CounterRng rng(seed, stream);
  Matrix m(rows, cols);
  for (Index j = 0; j < cols; ++j) {
    for (Index i = 0; i < rows; ++i) m(i, j) = rng.gaussian();
  }
  return m;
}

/// Orthonormal columns: thin-QR factor of an iid Gaussian matrix.
inline Matrix random_orthonormal(Index rows, Index cols, std::uint64_t seed,
                                 std::uint64_t stream) {
  return thin_qr(gaussian_matrix(rows, cols, seed, stream)).q;
}

}  // namespace detail

/// A d x n dictionary with the prescribed singular-value profile:
///   flat:      all min(d, n) singular values equal to 1
///   geometric: sigma_i = rate^(i-1), i = 1..min(d, n)
///   gaussian:  iid N(0, 1/d) entries (profile not controlled)
inline Matrix make_dictionary(Index rows, Index cols, DictionaryModel model,
                              double rate, std::uint64_t seed) {
  if (rows < 1 || cols < 1) {
    throw ConfigError("make_dictionary: dimensions must be positive");
  }
  if (model == DictionaryModel::GaussianAtoms) {
    return detail::gaussian_matrix(rows, cols, seed,
                                   streams::gen_left_factor) /
           std::sqrt(double(rows));
  }
  if (model == DictionaryModel::Geometric && !(rate > 0.0 && rate < 1.0)) {
    throw ConfigError("make_dictionary: geometric rate must lie in (0, 1)");
  }
  const Index r = std::min(rows, cols);
  const Matrix u =
      detail::random_orthonormal(rows, r, seed, streams::gen_left_factor);
  const Matrix v =
      detail::random_orthonormal(cols, r, seed, streams::gen_right_factor);
  Vector sigma(r);
  for (Index i = 0; i < r; ++i) {
    sigma[i] = model == DictionaryModel::Flat ? 1.0 : std::pow(rate, double(i));
  }
  return u * sigma.asDiagonal() * v.transpose();
}

/// A sparse code with `sparsity` nonzeros on a uniformly random support,
/// magnitudes uniform in [0.5, 1.5] with random signs.
inline SparseCode make_planted_code(Index n, Index sparsity,
                                    std::uint64_t seed) {
  if (sparsity < 0 || sparsity > n) {
    throw ConfigError("make_planted_code: sparsity must lie in [0, n]");
  }
  CounterRng rng(seed, streams::gen_code);
  std::vector<Index> perm(n);
  for (Index i = 0; i < n; ++i) perm[i] = i;
  for (Index i = n - 1; i > 0; --i) {
    std::swap(perm[i], perm[std::size_t(rng.below(std::uint64_t(i) + 1))]);
  }
  Vector values = Vector::Zero(n);
  for (Index t = 0; t < sparsity; ++t) {
    values[perm[t]] = rng.sign() * (0.5 + rng.uniform01());
  }
  return SparseCode::from_values(values);
}

struct GeneratedProblem {
  Matrix dictionary;
  Vector signal;
  SparseCode planted;  // zero code when sparsity == 0
  double noise_level = 0.0;
};

/// Full synthetic problem: dictionary per the model, planted code, and
/// signal x = D z + noise * g with g iid standard Gaussian.  When
/// sparsity == 0 the signal is a pure iid Gaussian vector instead.
inline GeneratedProblem make_problem(Index rows, Index cols,
                                     DictionaryModel model, double rate,
                                     Index sparsity, double noise,
                                     std::uint64_t seed) {
  if (noise < 0.0) throw ConfigError("make_problem: noise must be >= 0");
  GeneratedProblem out;
  out.dictionary = make_dictionary(rows, cols, model, rate, seed);
  out.planted = make_planted_code(cols, sparsity, seed);
  out.noise_level = noise;
  if (sparsity == 0) {
    CounterRng rng(seed, streams::gen_signal);
    out.signal = Vector(rows);
    for (Index i = 0; i < rows; ++i) out.signal[i] = rng.gaussian();
  } else {
    out.signal = out.dictionary * out.planted.values;
    if (noise > 0.0) {
      CounterRng rng(seed, streams::gen_noise);
      for (Index i = 0; i < rows; ++i) out.signal[i] += noise * rng.gaussian();
    }
  }
  return out;
}

struct GenConfig {
  Index rows = 6;
  Index cols = 8;
  DictionaryModel model = DictionaryModel::GaussianAtoms;
  double rate = 0.85;   // geometric profile decay
  Index sparsity = 2;   // planted support size
  double noise = 0.05;  // signal noise standard deviation
};

inline GenConfig gen_config_from_json(const Json& j) {
  GenConfig cfg;
  if (j.contains("rows")) cfg.rows = j.at("rows").get<Index>();
  if (j.contains("cols")) cfg.cols = j.at("cols").get<Index>();
  if (j.contains("model")) {
    cfg.model = parse_dictionary_model(j.at("model").get<std::string>());
  }
  if (j.contains("rate")) cfg.rate = j.at("rate").get<double>();
  if (j.contains("sparsity")) cfg.sparsity = j.at("sparsity").get<Index>();
  if (j.contains("noise")) cfg.noise = j.at("noise").get<double>();
  return cfg;
}

/// The `gen` subcommand: writes D.csv, x.csv, z_true.csv, and report.json
/// into `out_dir`.
inline int run_gen(const GenConfig& cfg, std::uint64_t seed,
                   const std::filesystem::path& out_dir) {
  std::filesystem::create_directories(out_dir);
  const GeneratedProblem prob =
      make_problem(cfg.rows, cfg.cols, cfg.model, cfg.rate, cfg.sparsity,
                   cfg.noise, seed);
  write_csv(out_dir / "D.csv", prob.dictionary);
  write_csv(out_dir / "x.csv", prob.signal);
  write_csv(out_dir / "z_true.csv", prob.planted.values);

  Json j = report_envelope("gen", seed);
  j["rows"] = cfg.rows;
  j["cols"] = cfg.cols;
  j["model"] = to_string(cfg.model);
  if (cfg.model == DictionaryModel::Geometric) {
    j["rate"] = json_number(cfg.rate);
  }
  j["sparsity"] = cfg.sparsity;
  j["noise"] = json_number(cfg.noise);
  j["planted_support"] = json_support(prob.planted.support);
  j["singular_values"] = json_vector(singular_values(prob.dictionary));
  j["files"] = Json{{"dictionary", "D.csv"},
                    {"signal", "x.csv"},
                    {"planted_code", "z_true.csv"}};
  write_report(out_dir / "report.json", j);
  return 0;
}

}  // namespace l0prox
