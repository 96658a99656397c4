#pragma once

// The `bench` subcommand: wall-clock comparison of the per-iteration
// gradient-step cost of the three solvers on one shared instance.
//
//   pgd   full dictionary        two d x n mat-vecs per step
//   rma   factor form Q W        O(nk) per step through W
//   rdr   reduced instance       two m x n mat-vecs per step
//
// Every sweep point reports the median per-iteration time over a number
// of timed steps, repeated `repetitions` times with fresh draws; the
// headline value is the median of those medians.  Timings below 100 us
// per step are flagged unreliable (clock noise dominates).  The exit
// code is always 0: bench measures, acceptance gates elsewhere.

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <filesystem>
#include <iostream>
#include <memory>
#include <string>
#include <vector>

#include "l0prox/cli/gen.hpp"
#include "l0prox/cli/report.hpp"
#include "l0prox/cli/solve.hpp"
#include "l0prox/core.hpp"
#include "l0prox/pgd.hpp"
#include "l0prox/randomized.hpp"

namespace l0prox {

struct BenchConfig {
  Index rows = 4096;
  Index cols = 512;
  Index iterations = 200;  // timed gradient steps per repetition
  Index repetitions = 5;
  std::vector<Index> k_sweep = {8, 16, 32};
  std::vector<Index> m_sweep = {64, 128, 256};
  double lambda = 0.02;
  double tau = 1.1;
  Index sparsity = 8;
  double noise = 0.05;
  std::string distribution = "gaussian";
};

inline BenchConfig bench_config_from_json(const Json& j) {
  BenchConfig cfg;
  if (j.contains("rows")) cfg.rows = j.at("rows").get<Index>();
  if (j.contains("cols")) cfg.cols = j.at("cols").get<Index>();
  if (j.contains("iterations")) {
    cfg.iterations = j.at("iterations").get<Index>();
  }
  if (j.contains("repetitions")) {
    cfg.repetitions = j.at("repetitions").get<Index>();
  }
  if (j.contains("k_sweep")) {
    cfg.k_sweep = j.at("k_sweep").get<std::vector<Index>>();
  }
  if (j.contains("m_sweep")) {
    cfg.m_sweep = j.at("m_sweep").get<std::vector<Index>>();
  }
  if (j.contains("lambda")) cfg.lambda = j.at("lambda").get<double>();
  if (j.contains("tau")) cfg.tau = j.at("tau").get<double>();
  if (j.contains("sparsity")) cfg.sparsity = j.at("sparsity").get<Index>();
  if (j.contains("noise")) cfg.noise = j.at("noise").get<double>();
  if (j.contains("distribution")) cfg.distribution = j.at("distribution");
  return cfg;
}

namespace detail {

/// Guard threshold below which a per-step median is dominated by clock
/// resolution and scheduling noise.
constexpr double kReliableStepUs = 100.0;

inline double median_of(std::vector<double> v) {
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  return v[v.size() / 2];
}

/// Time `iterations` calls of step(), returning the median microseconds
/// per call.  A checksum defeats dead-code elimination.
template <class Step>
double time_steps(Index iterations, volatile double& sink, const Step& step) {
  using clock = std::chrono::steady_clock;
  std::vector<double> us(static_cast<std::size_t>(iterations));
  for (Index warm = 0; warm < 3; ++warm) sink = sink + step();
  for (Index i = 0; i < iterations; ++i) {
    const auto t0 = clock::now();
    const double mark = step();
    const auto t1 = clock::now();
    sink = sink + mark;
    us[std::size_t(i)] =
        std::chrono::duration<double, std::micro>(t1 - t0).count();
  }
  return median_of(std::move(us));
}

}  // namespace detail

/// One sweep point: the across-repetitions median of per-step medians,
/// plus the setup (sketch / reduce) time.
struct KernelTiming {
  double median_us = 0.0;
  double setup_ms = 0.0;
  bool reliable = false;
  std::vector<double> repetition_medians_us;
};

inline Json to_json(const KernelTiming& t) {
  Json j;
  j["median_us"] = json_number(t.median_us);
  j["setup_ms"] = json_number(t.setup_ms);
  j["reliable"] = t.reliable;
  Json reps = Json::array();
  for (double r : t.repetition_medians_us) reps.push_back(json_number(r));
  j["repetition_medians_us"] = reps;
  return j;
}

inline int run_bench(const BenchConfig& cfg, std::uint64_t seed,
                     const std::filesystem::path& out_dir,
                     bool with_timings = true) {
  const auto t_start = std::chrono::steady_clock::now();
  if (cfg.rows < 1 || cfg.cols < 1) {
    throw ConfigError("bench: rows and cols must be positive");
  }
  if (cfg.iterations < 1 || cfg.repetitions < 1) {
    throw ConfigError("bench: iterations and repetitions must be positive");
  }
  const JlDistribution dist = parse_jl_distribution(cfg.distribution);

  const GeneratedProblem prob =
      make_problem(cfg.rows, cfg.cols, DictionaryModel::GaussianAtoms, 0.85,
                   std::min(cfg.sparsity, cfg.cols), cfg.noise, seed);
  const ProblemInstance inst =
      normalize_instance(prob.dictionary, prob.signal, cfg.lambda, cfg.tau);
  // Shared iterate for all kernels: the planted code on the instance's
  // scale.  The gradient step is dense, so its cost does not depend on
  // the iterate's sparsity.
  SparseCode z = prob.planted;
  z.values /= inst.code_scale;
  const double s = 1.0;  // scalar factor only; does not affect cost

  volatile double sink = 0.0;
  auto run_reps = [&](auto&& setup_and_step) {
    KernelTiming out;
    std::vector<double> setups;
    for (Index rep = 0; rep < cfg.repetitions; ++rep) {
      using clock = std::chrono::steady_clock;
      const auto s0 = clock::now();
      auto step = setup_and_step(seed + std::uint64_t(rep));
      const auto s1 = clock::now();
      setups.push_back(
          std::chrono::duration<double, std::milli>(s1 - s0).count());
      out.repetition_medians_us.push_back(
          detail::time_steps(cfg.iterations, sink, step));
    }
    out.median_us = detail::median_of(out.repetition_medians_us);
    out.setup_ms = detail::median_of(std::move(setups));
    out.reliable = out.median_us >= detail::kReliableStepUs;
    return out;
  };

  // --- full PGD baseline ----------------------------------------------------
  const KernelTiming pgd = run_reps([&](std::uint64_t) {
    return [&]() {
      return gradient_step(inst, z, s).sum();
    };
  });

  // --- rma sweep --------------------------------------------------------------
  std::vector<KernelTiming> rma;
  for (const Index k : cfg.k_sweep) {
    if (k < 1 || k > std::min(cfg.rows, cfg.cols)) {
      throw ConfigError("bench: k_sweep entries must lie in [1, min(d, n)]");
    }
    rma.push_back(run_reps([&](std::uint64_t rep_seed) {
      auto sketch = std::make_shared<SketchedDictionary>(
          range_finder(inst.dict, k, rep_seed));
      auto wt_qtx = std::make_shared<Vector>(
          sketch->w.transpose() *
          (sketch->q.transpose() * inst.signal.values));
      return [&, sketch, wt_qtx]() {
        return rma_gradient_step_cached(*sketch, *wt_qtx, inst.tau, s,
                                        z.values)
            .sum();
      };
    }));
  }

  // --- rdr sweep --------------------------------------------------------------
  std::vector<KernelTiming> rdr;
  for (const Index m : cfg.m_sweep) {
    if (m < 1) throw ConfigError("bench: m_sweep entries must be positive");
    rdr.push_back(run_reps([&](std::uint64_t rep_seed) {
      auto red = std::make_shared<ReducedInstance>(
          build_reduced_instance(inst, m, dist, rep_seed));
      return [&, red]() {
        return gradient_step(red->reduced, z, s).sum();
      };
    }));
  }

  auto monotone = [](const std::vector<KernelTiming>& v) {
    for (std::size_t i = 1; i < v.size(); ++i) {
      if (v[i].median_us < v[i - 1].median_us) return false;
    }
    return true;
  };
  auto speedup = [&](const KernelTiming& t) {
    return t.median_us > 0.0 ? pgd.median_us / t.median_us : kInf;
  };

  Json j = report_envelope("bench", seed);
  j["params"] = Json{{"rows", cfg.rows},
                     {"cols", cfg.cols},
                     {"iterations", cfg.iterations},
                     {"repetitions", cfg.repetitions},
                     {"lambda", json_number(cfg.lambda)},
                     {"tau", json_number(cfg.tau)},
                     {"sparsity", cfg.sparsity},
                     {"noise", json_number(cfg.noise)},
                     {"distribution", to_string(dist)}};
  j["pgd"] = to_json(pgd);
  Json rma_rows = Json::array();
  for (std::size_t i = 0; i < rma.size(); ++i) {
    Json row = to_json(rma[i]);
    row["sketch_rank"] = cfg.k_sweep[i];
    row["speedup_vs_pgd"] = json_number(speedup(rma[i]));
    rma_rows.push_back(row);
  }
  j["rma"] = rma_rows;
  Json rdr_rows = Json::array();
  for (std::size_t i = 0; i < rdr.size(); ++i) {
    Json row = to_json(rdr[i]);
    row["reduced_dim"] = cfg.m_sweep[i];
    row["speedup_vs_pgd"] = json_number(speedup(rdr[i]));
    rdr_rows.push_back(row);
  }
  j["rdr"] = rdr_rows;
  j["rma_monotone_in_k"] = monotone(rma);
  j["rdr_monotone_in_m"] = monotone(rdr);
  j["reliable"] = pgd.reliable;
  j["checksum"] = json_number(double(sink));
  if (with_timings) {
    const auto t_end = std::chrono::steady_clock::now();
    j["timings"] = Json{
        {"total_ms",
         json_number(std::chrono::duration<double, std::milli>(t_end - t_start)
                         .count())}};
  }
  std::filesystem::create_directories(out_dir);
  write_report(out_dir / "report.json", j);

  std::cout << "pgd: median_us=" << format_double(pgd.median_us)
            << (pgd.reliable ? "" : " (unreliable)") << '\n';
  for (std::size_t i = 0; i < rma.size(); ++i) {
    std::cout << "rma[k=" << cfg.k_sweep[i]
              << "]: median_us=" << format_double(rma[i].median_us)
              << " speedup=" << format_double(speedup(rma[i]))
              << (rma[i].reliable ? "" : " (unreliable)") << '\n';
  }
  for (std::size_t i = 0; i < rdr.size(); ++i) {
    std::cout << "rdr[m=" << cfg.m_sweep[i]
              << "]: median_us=" << format_double(rdr[i].median_us)
              << " speedup=" << format_double(speedup(rdr[i]))
              << (rdr[i].reliable ? "" : " (unreliable)") << '\n';
  }
  return 0;
}

}  // namespace l0prox
