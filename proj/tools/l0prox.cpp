// Command-line front end: gen | solve | verify | bench.
//
// Every subcommand takes --config FILE (JSON), --seed N, --out DIR, and
// --no-timings; selected fields can also be overridden directly on the
// command line (overrides win over the config file).  Exit codes:
//   0  success, and no binding deterministic certificate violated
//   1  a binding deterministic certificate was violated (verify)
//   2  any error (bad config, unreadable files, solver precondition, ...)

#include <cstdint>
#include <exception>
#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "l0prox/cli/bench.hpp"
#include "l0prox/cli/gen.hpp"
#include "l0prox/cli/report.hpp"
#include "l0prox/cli/solve.hpp"
#include "l0prox/cli/verify.hpp"
#include "l0prox/errors.hpp"
#include "l0prox/version.hpp"

namespace {

l0prox::Json load_config(const std::string& path) {
  if (path.empty()) return l0prox::Json::object();
  std::ifstream in(path);
  if (!in) throw l0prox::IoError("cannot open config file: " + path);
  try {
    l0prox::Json j;
    in >> j;
    if (!j.is_object()) {
      throw l0prox::InvalidData("config file must hold a JSON object: " +
                                path);
    }
    return j;
  } catch (const l0prox::Error&) {
    throw;
  } catch (const std::exception& e) {
    throw l0prox::InvalidData("config parse error in " + path + ": " +
                              e.what());
  }
}

struct Common {
  std::string config_path;
  std::uint64_t seed = 0;
  std::string out_dir = "out";
  bool no_timings = false;
  l0prox::Json overlay = l0prox::Json::object();

  void attach(CLI::App* cmd) {
    cmd->add_option("--config", config_path, "JSON config file");
    cmd->add_option("--seed", seed, "base seed (default 0)");
    cmd->add_option("--out", out_dir, "output directory (default ./out)");
    cmd->add_flag("--no-timings", no_timings,
                  "omit wall-clock timings from the report");
  }
  l0prox::Json merged() const {
    l0prox::Json j = load_config(config_path);
    j.update(overlay);
    return j;
  }
};

// Option helpers writing straight into the JSON overlay, so command-line
// values override config-file values uniformly.
void opt_str(CLI::App* cmd, l0prox::Json& overlay, const std::string& name,
             const std::string& key, const std::string& desc) {
  cmd->add_option_function<std::string>(
      name, [&overlay, key](const std::string& v) { overlay[key] = v; }, desc);
}
void opt_int(CLI::App* cmd, l0prox::Json& overlay, const std::string& name,
             const std::string& key, const std::string& desc) {
  cmd->add_option_function<std::int64_t>(
      name, [&overlay, key](std::int64_t v) { overlay[key] = v; }, desc);
}
void opt_num(CLI::App* cmd, l0prox::Json& overlay, const std::string& name,
             const std::string& key, const std::string& desc) {
  cmd->add_option_function<double>(
      name, [&overlay, key](double v) { overlay[key] = v; }, desc);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"l0-penalised sparse coding: proximal gradient descent with "
               "randomized low-rank and dimension-reduction accelerations"};
  app.set_version_flag("--version", std::string(l0prox::version_string));
  app.require_subcommand(1);

  Common gen_common, solve_common, verify_common, bench_common;

  CLI::App* gen = app.add_subcommand("gen", "generate a synthetic instance");
  gen_common.attach(gen);
  opt_int(gen, gen_common.overlay, "--rows", "rows", "signal dimension d");
  opt_int(gen, gen_common.overlay, "--cols", "cols", "number of atoms n");
  opt_str(gen, gen_common.overlay, "--model", "model",
          "dictionary model: flat | geometric | gaussian");
  opt_num(gen, gen_common.overlay, "--rate", "rate",
          "geometric singular-value decay rate");
  opt_int(gen, gen_common.overlay, "--sparsity", "sparsity",
          "planted support size (0: pure noise signal)");
  opt_num(gen, gen_common.overlay, "--noise", "noise",
          "additive noise level");

  CLI::App* solve = app.add_subcommand("solve", "run a solver on CSV data");
  solve_common.attach(solve);
  opt_str(solve, solve_common.overlay, "--dictionary", "dictionary",
          "dictionary CSV (d x n)");
  opt_str(solve, solve_common.overlay, "--signal", "signal",
          "signal CSV (length d)");
  opt_str(solve, solve_common.overlay, "--algorithm", "algorithm",
          "pgd | rma | rdr");
  opt_num(solve, solve_common.overlay, "--lambda", "lambda",
          "sparsity penalty weight");
  opt_num(solve, solve_common.overlay, "--tau", "tau", "step factor (> 1)");
  opt_str(solve, solve_common.overlay, "--step-mode", "step_mode",
          "shrinkage | lipschitz | manual");
  opt_num(solve, solve_common.overlay, "--s", "manual_s", "manual step size");
  opt_str(solve, solve_common.overlay, "--init", "init",
          "zero | ista | file");
  opt_str(solve, solve_common.overlay, "--init-file", "init_file",
          "initial code CSV when --init file");
  opt_num(solve, solve_common.overlay, "--eps", "eps",
          "convergence threshold");
  opt_int(solve, solve_common.overlay, "--max-iter", "max_iter",
          "iteration cap");
  opt_int(solve, solve_common.overlay, "--sketch-rank", "sketch_rank",
          "rma: sketch rank k");
  opt_int(solve, solve_common.overlay, "--reduced-dim", "reduced_dim",
          "rdr: reduced dimension m");
  opt_str(solve, solve_common.overlay, "--distribution", "distribution",
          "rdr: gaussian | sign | database_friendly");
  solve->add_flag_function(
      "--trace,!--no-trace",
      [&](std::int64_t v) { solve_common.overlay["trace"] = v > 0; },
      "write the per-iteration table (default on)");
  solve->add_flag_function(
      "--refine,!--no-refine",
      [&](std::int64_t v) { solve_common.overlay["refine"] = v > 0; },
      "least-squares refinement at convergence (default on)");

  CLI::App* verify =
      app.add_subcommand("verify", "run a bound-verification campaign");
  verify_common.attach(verify);
  opt_str(verify, verify_common.overlay, "campaign", "campaign",
          "pgd_gap | rma | rdr | rangefinder | jl | product");
  opt_int(verify, verify_common.overlay, "--trials", "trials",
          "number of trials");
  opt_int(verify, verify_common.overlay, "--rows", "rows", "rows");
  opt_int(verify, verify_common.overlay, "--cols", "cols", "cols");
  opt_int(verify, verify_common.overlay, "--inner", "inner",
          "product: shared inner dimension");
  opt_str(verify, verify_common.overlay, "--model", "model",
          "dictionary model");
  opt_num(verify, verify_common.overlay, "--rate", "rate", "decay rate");
  opt_int(verify, verify_common.overlay, "--sparsity", "sparsity",
          "planted support size");
  opt_num(verify, verify_common.overlay, "--noise", "noise", "noise level");
  opt_num(verify, verify_common.overlay, "--lambda", "lambda",
          "sparsity penalty weight");
  opt_num(verify, verify_common.overlay, "--tau", "tau", "step factor");
  opt_int(verify, verify_common.overlay, "--sketch-rank", "sketch_rank",
          "sketch rank k");
  opt_int(verify, verify_common.overlay, "--rank-k0", "rank_k0",
          "target rank k0 of the error constant");
  opt_int(verify, verify_common.overlay, "--reduced-dim", "reduced_dim",
          "reduced dimension m");
  opt_str(verify, verify_common.overlay, "--distribution", "distribution",
          "projection distribution");
  opt_num(verify, verify_common.overlay, "--c", "c",
          "norm-preservation constant c");
  opt_num(verify, verify_common.overlay, "--delta", "delta",
          "failure probability delta");
  opt_num(verify, verify_common.overlay, "--epsilon", "epsilon",
          "jl: distortion epsilon");

  CLI::App* bench =
      app.add_subcommand("bench", "time the per-iteration gradient kernels");
  bench_common.attach(bench);
  opt_int(bench, bench_common.overlay, "--rows", "rows", "signal dimension d");
  opt_int(bench, bench_common.overlay, "--cols", "cols", "number of atoms n");
  opt_int(bench, bench_common.overlay, "--iterations", "iterations",
          "timed steps per repetition");
  opt_int(bench, bench_common.overlay, "--repetitions", "repetitions",
          "repetitions (median of medians)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (gen->parsed()) {
      return l0prox::run_gen(l0prox::gen_config_from_json(gen_common.merged()),
                             gen_common.seed, gen_common.out_dir);
    }
    if (solve->parsed()) {
      return l0prox::run_solve(
          l0prox::solve_config_from_json(solve_common.merged()),
          solve_common.seed, solve_common.out_dir, !solve_common.no_timings);
    }
    if (verify->parsed()) {
      return l0prox::run_verify(
          l0prox::verify_config_from_json(verify_common.merged()),
          verify_common.seed, verify_common.out_dir,
          !verify_common.no_timings);
    }
    if (bench->parsed()) {
      return l0prox::run_bench(
          l0prox::bench_config_from_json(bench_common.merged()),
          bench_common.seed, bench_common.out_dir, !bench_common.no_timings);
    }
  } catch (const l0prox::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 2;  // unreachable: a subcommand is required
}
