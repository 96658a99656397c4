#pragma once

// The `solve` subcommand: load a dictionary and signal, normalise,
// initialise, run one of the three solvers, and write code.csv,
// report.json, and (optionally) trace.csv.

#include <chrono>
#include <filesystem>
#include <iostream>
#include <string>

#include "l0prox/cli/csv.hpp"
#include "l0prox/cli/report.hpp"
#include "l0prox/core.hpp"
#include "l0prox/errors.hpp"
#include "l0prox/pgd.hpp"
#include "l0prox/randomized.hpp"
#include "l0prox/rng.hpp"

namespace l0prox {

inline JlDistribution parse_jl_distribution(const std::string& name) {
  if (name == "gaussian") return JlDistribution::Gaussian;
  if (name == "sign") return JlDistribution::Sign;
  if (name == "database_friendly") return JlDistribution::DatabaseFriendly;
  if (name == "identity") return JlDistribution::Identity;
  throw ConfigError("unknown projection distribution '" + name +
                    "' (expected gaussian, sign, or database_friendly)");
}

inline StepMode parse_step_mode(const std::string& name) {
  if (name == "shrinkage") return StepMode::Shrinkage;
  if (name == "lipschitz") return StepMode::Lipschitz;
  if (name == "manual") return StepMode::Manual;
  throw ConfigError("unknown step mode '" + name +
                    "' (expected shrinkage, lipschitz, or manual)");
}

inline std::string to_string(StepMode mode) {
  switch (mode) {
    case StepMode::Shrinkage: return "shrinkage";
    case StepMode::Lipschitz: return "lipschitz";
    case StepMode::Manual: return "manual";
  }
  return "?";
}

struct SolveConfig {
  std::string dictionary;  // CSV path, required
  std::string signal;      // CSV path, required
  double lambda = 0.0;     // required
  double tau = 1.1;
  std::string algorithm = "pgd";  // pgd | rma | rdr
  StepMode step_mode = StepMode::Shrinkage;
  double manual_s = 0.0;
  double margin = 1.01;
  std::string init = "ista";  // ista | zero | file
  std::string init_file;
  double eps = 1e-10;
  Index max_iter = 10000;
  bool refine = true;
  bool trace = true;
  Index sketch_rank = 0;  // rma only
  Index reduced_dim = 0;  // rdr only
  JlDistribution distribution = JlDistribution::Gaussian;  // rdr only
};

inline SolveConfig solve_config_from_json(const Json& j) {
  SolveConfig cfg;
  if (j.contains("dictionary")) cfg.dictionary = j.at("dictionary");
  if (j.contains("signal")) cfg.signal = j.at("signal");
  if (j.contains("lambda")) cfg.lambda = j.at("lambda").get<double>();
  if (j.contains("tau")) cfg.tau = j.at("tau").get<double>();
  if (j.contains("algorithm")) cfg.algorithm = j.at("algorithm");
  if (j.contains("step_mode")) {
    cfg.step_mode = parse_step_mode(j.at("step_mode").get<std::string>());
  }
  if (j.contains("manual_s")) cfg.manual_s = j.at("manual_s").get<double>();
  if (j.contains("margin")) cfg.margin = j.at("margin").get<double>();
  if (j.contains("init")) cfg.init = j.at("init");
  if (j.contains("init_file")) cfg.init_file = j.at("init_file");
  if (j.contains("eps")) cfg.eps = j.at("eps").get<double>();
  if (j.contains("max_iter")) cfg.max_iter = j.at("max_iter").get<Index>();
  if (j.contains("refine")) cfg.refine = j.at("refine").get<bool>();
  if (j.contains("trace")) cfg.trace = j.at("trace").get<bool>();
  if (j.contains("sketch_rank")) {
    cfg.sketch_rank = j.at("sketch_rank").get<Index>();
  }
  if (j.contains("reduced_dim")) {
    cfg.reduced_dim = j.at("reduced_dim").get<Index>();
  }
  if (j.contains("distribution")) {
    cfg.distribution =
        parse_jl_distribution(j.at("distribution").get<std::string>());
  }
  return cfg;
}

namespace detail {

/// Resolve the init code in normalised coordinates.  File inits are given
/// in the original problem units (the units of code.csv) and divided by
/// code_scale; ista runs against the data the chosen solver will see.
inline SparseCode resolve_init(const SolveConfig& cfg,
                               const ProblemInstance& inst,
                               const SketchedDictionary* sketch,
                               const ReducedInstance* red, Json& report) {
  if (cfg.init == "zero") return SparseCode::zeros(inst.atoms());
  if (cfg.init == "file") {
    if (cfg.init_file.empty()) {
      throw ConfigError("init = file requires init_file");
    }
    Vector v = read_csv_vector(cfg.init_file);
    if (v.size() != inst.atoms()) {
      throw DimensionError("init file length != number of atoms");
    }
    return SparseCode::from_values(v / inst.code_scale);
  }
  if (cfg.init != "ista") {
    throw ConfigError("unknown init '" + cfg.init +
                      "' (expected ista, zero, or file)");
  }
  IstaResult ista;
  if (sketch != nullptr) {
    ista = ista_init_sketched(*sketch, inst);
  } else if (red != nullptr) {
    ista = ista_init(red->reduced);
  } else {
    ista = ista_init(inst);
  }
  report["init_iterations"] = ista.iterations;
  report["init_l1_objective"] = json_number(ista.l1_objective);
  report["init_certificate_ok"] = ista.certificate_ok;
  return ista.code;
}

}  // namespace detail

inline int run_solve(const SolveConfig& cfg, std::uint64_t seed,
                     const std::filesystem::path& out_dir,
                     bool with_timings = true) {
  if (cfg.dictionary.empty() || cfg.signal.empty()) {
    throw ConfigError("solve requires dictionary and signal CSV paths");
  }
  const auto t_start = std::chrono::steady_clock::now();
  const Matrix d_raw = read_csv_matrix(cfg.dictionary);
  const Vector x_raw = read_csv_vector(cfg.signal);
  const ProblemInstance inst =
      normalize_instance(d_raw, x_raw, cfg.lambda, cfg.tau);

  PgdOptions opts;
  opts.step.mode = cfg.step_mode;
  opts.step.manual_s = cfg.manual_s;
  opts.step.margin = cfg.margin;
  opts.eps = cfg.eps;
  opts.max_iter = cfg.max_iter;
  opts.refine = cfg.refine;
  opts.record_trace = cfg.trace;

  Json j = report_envelope("solve", seed);
  j["algorithm"] = cfg.algorithm;
  j["step_mode"] = to_string(cfg.step_mode);
  j["lambda"] = json_number(cfg.lambda);
  j["tau"] = json_number(cfg.tau);
  j["eps"] = json_number(cfg.eps);
  j["max_iter"] = cfg.max_iter;
  j["init"] = cfg.init;
  j["rows"] = inst.dim();
  j["cols"] = inst.atoms();
  j["dict_scale"] = json_number(inst.dict_scale);
  j["signal_scale"] = json_number(inst.signal_scale);
  j["code_scale"] = json_number(inst.code_scale);

  SolveReport result;
  if (cfg.algorithm == "pgd") {
    const SparseCode init = detail::resolve_init(cfg, inst, nullptr, nullptr, j);
    j["init_support_size"] = init.support_size();
    result = pgd_solve(inst, init, opts);
  } else if (cfg.algorithm == "rma") {
    if (cfg.sketch_rank < 1) {
      throw ConfigError("algorithm = rma requires sketch_rank >= 1");
    }
    const SketchedDictionary sketch =
        range_finder(inst.dict, cfg.sketch_rank, seed);
    const SparseCode init = detail::resolve_init(cfg, inst, &sketch, nullptr, j);
    j["init_support_size"] = init.support_size();
    result = pgd_rma_solve(inst, sketch, init, opts);
    j["sketch_rank"] = result.sketch_rank;
    j["sketch_rank_deficient"] = sketch.rank_deficient;
    j["sketch_residual_estimate"] = json_number(result.sketch_residual);
  } else if (cfg.algorithm == "rdr") {
    if (cfg.reduced_dim < 1) {
      throw ConfigError("algorithm = rdr requires reduced_dim >= 1");
    }
    const ReducedInstance red =
        build_reduced_instance(inst, cfg.reduced_dim, cfg.distribution, seed);
    const SparseCode init = detail::resolve_init(cfg, inst, nullptr, &red, j);
    j["init_support_size"] = init.support_size();
    result = pgd_rdr_solve(red, init, opts);
    j["reduced_dim"] = result.reduced_dim;
    j["distribution"] = result.draw_distribution;
  } else {
    throw ConfigError("unknown algorithm '" + cfg.algorithm +
                      "' (expected pgd, rma, or rdr)");
  }

  std::filesystem::create_directories(out_dir);
  const SparseCode out_code = denormalize_code(inst, result.code);
  write_csv(out_dir / "code.csv", out_code.values);
  if (cfg.trace) {
    Matrix trace(Index(result.trace.size()), 4);
    for (Index i = 0; i < trace.rows(); ++i) {
      const IterationRecord& rec = result.trace[std::size_t(i)];
      trace(i, 0) = double(rec.t);
      trace(i, 1) = rec.objective;
      trace(i, 2) = double(rec.support_size);
      trace(i, 3) = rec.step_norm;
    }
    write_csv(out_dir / "trace.csv", trace);
  }

  // The solver's objective lives on the normalised data; re-express its
  // residual part in the units of the input files (lambda counts the same
  // support either way) so users can compare against their own arithmetic.
  const double nnz = double(result.code.support_size());
  const double resid2_scaled = result.final_objective - cfg.lambda * nnz;
  const double objective_raw =
      inst.signal_scale * inst.signal_scale * resid2_scaled + cfg.lambda * nnz;

  j["terminated_by"] = to_string(result.terminated_by);
  j["iterations"] = result.iterations;
  j["s_used"] = json_number(result.s_used);
  j["theta_used"] = json_number(result.theta_used);
  j["final_objective"] = json_number(result.final_objective);
  j["final_objective_raw"] = json_number(objective_raw);
  j["support"] = json_support(result.code.support);
  j["support_size"] = result.code.support_size();
  j["support_shrank_every_step"] = result.support_shrank_every_step;
  j["refined"] = result.refined;
  Json warnings = Json::array();
  for (const auto& w : result.warnings) warnings.push_back(w);
  j["warnings"] = warnings;
  j["files"] = cfg.trace
                   ? Json{{"code", "code.csv"}, {"trace", "trace.csv"}}
                   : Json{{"code", "code.csv"}};
  if (with_timings) {
    const auto t_end = std::chrono::steady_clock::now();
    j["timings"] = Json{
        {"total_ms",
         json_number(std::chrono::duration<double, std::milli>(t_end - t_start)
                         .count())}};
  }
  write_report(out_dir / "report.json", j);

  std::string support_text = "[";
  for (std::size_t i = 0; i < result.code.support.size(); ++i) {
    if (i > 0) support_text += ", ";
    support_text += std::to_string(result.code.support[i]);
  }
  support_text += "]";
  std::cout << "objective=" << format_double(objective_raw)
            << " support=" << support_text
            << " iterations=" << result.iterations << '\n';
  return 0;
}

}  // namespace l0prox
