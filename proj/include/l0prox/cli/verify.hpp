#pragma once

// The `verify` subcommand: seeded Monte-Carlo campaigns that drive
// {generate -> solve -> oracle -> certificate} pipelines and check the
// library's suboptimality bounds numerically.
//
// Campaigns:
//   pgd_gap     gap certificates for plain PGD against the exhaustive
//               oracle (deterministic; zero violations tolerated)
//   rma         double-oracle certificates for the rank-sketched solver
//   rdr         double-oracle certificates for the dimension-reduced
//               solver (statistical part counted against delta)
//   rangefinder spectral error of the randomized range finder vs its
//               error constant
//   jl          norm preservation of the three projection distributions
//   product     projected-product concentration
//
// The process exit code is 0 iff no *binding deterministic* certificate
// was violated; probabilistic and Monte-Carlo outcomes are reported (and
// gated by the acceptance suite) but do not affect the exit code.

#include <algorithm>
#include <array>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include "l0prox/cli/gen.hpp"
#include "l0prox/cli/report.hpp"
#include "l0prox/cli/solve.hpp"
#include "l0prox/core.hpp"
#include "l0prox/errors.hpp"
#include "l0prox/pgd.hpp"
#include "l0prox/randomized.hpp"
#include "l0prox/theory.hpp"

namespace l0prox {

// ============================================================================
// Parallel trial runner
// ============================================================================

/// Worker-thread budget: L0PROX_THREADS when set (must be a positive
/// integer), else hardware concurrency clamped to [1, 16].
inline Index thread_budget() {
  if (const char* env = std::getenv("L0PROX_THREADS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end == env || *end != '\0' || v < 1) {
      throw ConfigError("L0PROX_THREADS must be a positive integer");
    }
    return Index(std::min(v, 64L));
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return Index(std::min(16u, std::max(1u, hw)));
}

/// Run f(0..n-1), possibly across threads.  Each trial must write only
/// into its own pre-sized slot so results are independent of scheduling;
/// aggregation stays with the caller, in index order.
template <class F>
void run_trials(Index n, F&& f) {
  const Index workers = std::min(thread_budget(), std::max<Index>(n, 1));
  if (workers <= 1 || n <= 1) {
    for (Index i = 0; i < n; ++i) f(i);
    return;
  }
  std::atomic<Index> next{0};
  std::mutex error_mutex;
  std::exception_ptr first_error;
  auto drain = [&] {
    while (true) {
      const Index i = next.fetch_add(1);
      if (i >= n) return;
      try {
        f(i);
      } catch (...) {
        const std::lock_guard<std::mutex> lock(error_mutex);
        if (!first_error) first_error = std::current_exception();
        return;
      }
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(std::size_t(workers));
  for (Index w = 0; w < workers; ++w) pool.emplace_back(drain);
  for (auto& t : pool) t.join();
  if (first_error) std::rethrow_exception(first_error);
}

// ============================================================================
// Config
// ============================================================================

struct VerifyConfig {
  std::string campaign;
  // Negative / empty fields take the campaign's pinned default.
  Index trials = -1;
  Index rows = -1;
  Index cols = -1;
  Index inner = -1;  // product campaign: shared dimension of A and B
  std::string model;
  double rate = -1.0;
  Index sparsity = -1;
  double noise = -1.0;
  double lambda = -1.0;
  double tau = -1.0;
  double eps = -1.0;
  Index max_iter = -1;
  Index sketch_rank = -1;
  Index rank_k0 = -1;
  Index reduced_dim = -1;
  std::string distribution;
  double c = -1.0;
  double delta = -1.0;
  double epsilon = -1.0;
};

inline VerifyConfig verify_config_from_json(const Json& j) {
  VerifyConfig cfg;
  if (j.contains("campaign")) cfg.campaign = j.at("campaign");
  if (j.contains("trials")) cfg.trials = j.at("trials").get<Index>();
  if (j.contains("rows")) cfg.rows = j.at("rows").get<Index>();
  if (j.contains("cols")) cfg.cols = j.at("cols").get<Index>();
  if (j.contains("inner")) cfg.inner = j.at("inner").get<Index>();
  if (j.contains("model")) cfg.model = j.at("model");
  if (j.contains("rate")) cfg.rate = j.at("rate").get<double>();
  if (j.contains("sparsity")) cfg.sparsity = j.at("sparsity").get<Index>();
  if (j.contains("noise")) cfg.noise = j.at("noise").get<double>();
  if (j.contains("lambda")) cfg.lambda = j.at("lambda").get<double>();
  if (j.contains("tau")) cfg.tau = j.at("tau").get<double>();
  if (j.contains("eps")) cfg.eps = j.at("eps").get<double>();
  if (j.contains("max_iter")) cfg.max_iter = j.at("max_iter").get<Index>();
  if (j.contains("sketch_rank")) {
    cfg.sketch_rank = j.at("sketch_rank").get<Index>();
  }
  if (j.contains("rank_k0")) cfg.rank_k0 = j.at("rank_k0").get<Index>();
  if (j.contains("reduced_dim")) {
    cfg.reduced_dim = j.at("reduced_dim").get<Index>();
  }
  if (j.contains("distribution")) cfg.distribution = j.at("distribution");
  if (j.contains("c")) cfg.c = j.at("c").get<double>();
  if (j.contains("delta")) cfg.delta = j.at("delta").get<double>();
  if (j.contains("epsilon")) cfg.epsilon = j.at("epsilon").get<double>();
  return cfg;
}

namespace detail {

inline Index pick(Index v, Index fallback) { return v < 0 ? fallback : v; }
inline double pick(double v, double fallback) {
  return v < 0.0 ? fallback : v;
}
inline std::string pick(const std::string& v, const std::string& fallback) {
  return v.empty() ? fallback : v;
}

/// Binomial acceptance slack: three standard deviations of the empirical
/// rate around p over n trials.
inline double binomial_slack(double p, Index n) {
  if (n < 1) return 0.0;
  return 3.0 * std::sqrt(std::max(0.0, p * (1.0 - p)) / double(n));
}

inline double certificate_margin(const BoundCertificate& c) {
  if (std::isinf(c.bound_value)) return -kInf;
  return c.actual_gap - c.bound_value;
}

/// Worst case over oracle ties: a violated binding certificate beats a
/// clean binding one beats a non-binding one; within a class, the larger
/// gap-minus-bound margin wins.
struct WorstCertificate {
  BoundCertificate cert;
  bool any = false;

  static int severity(const BoundCertificate& c) {
    return c.violated() ? 2 : (c.assumptions_ok ? 1 : 0);
  }
  void consider(const BoundCertificate& c) {
    if (!any) {
      cert = c;
      any = true;
      return;
    }
    const int sc = severity(c), sb = severity(cert);
    if (sc > sb ||
        (sc == sb && certificate_margin(c) > certificate_margin(cert))) {
      cert = c;
    }
  }
};

inline Json certificate_row(const BoundCertificate& c) {
  Json j;
  j["gap"] = json_number(c.actual_gap);
  j["bound"] = json_number(c.bound_value);
  j["binding"] = c.assumptions_ok;
  j["violated"] = c.violated();
  return j;
}

struct RatioStats {
  std::vector<double> ratios;  // gap / bound among binding certificates
  void add(const BoundCertificate& c) {
    if (!c.assumptions_ok) return;
    if (c.bound_value > 0.0 && std::isfinite(c.bound_value)) {
      ratios.push_back(c.actual_gap / c.bound_value);
    } else if (c.bound_value == 0.0) {
      ratios.push_back(c.actual_gap == 0.0 ? 0.0 : kInf);
    }
  }
  Json summary() const {
    Json j;
    if (ratios.empty()) {
      j["count"] = 0;
      return j;
    }
    std::vector<double> s = ratios;
    std::sort(s.begin(), s.end());
    j["count"] = Index(s.size());
    j["min"] = json_number(s.front());
    j["median"] = json_number(s[s.size() / 2]);
    j["max"] = json_number(s.back());
    return j;
  }
};

}  // namespace detail

struct CampaignResult {
  Json report;
  bool deterministic_violation = false;
  std::vector<std::string> lines;  // human summary, printed by run_verify
};

// ============================================================================
// pgd_gap campaign
// ============================================================================

inline CampaignResult campaign_pgd_gap(const VerifyConfig& cfg,
                                       std::uint64_t seed) {
  using detail::pick;
  const Index trials = pick(cfg.trials, Index(50));
  const Index rows = pick(cfg.rows, Index(6));
  const Index cols = pick(cfg.cols, Index(8));
  const DictionaryModel model =
      parse_dictionary_model(pick(cfg.model, std::string("gaussian")));
  const double rate = pick(cfg.rate, 0.85);
  const Index sparsity = pick(cfg.sparsity, Index(2));
  const double noise = pick(cfg.noise, 0.05);
  const double lambda = pick(cfg.lambda, 0.02);
  const double tau = pick(cfg.tau, 1.1);
  if (cols > 20) {
    throw RefuseEnumeration("pgd_gap campaign: cols > 20 has no oracle");
  }

  PgdOptions opts;
  opts.eps = pick(cfg.eps, 1e-12);
  opts.max_iter = pick(cfg.max_iter, Index(10000));
  opts.record_trace = false;

  struct Row {
    BoundCertificate cert;
    bool have_cert = false;
    Index ties = 0;
    Index iterations = 0;
    bool refined = false;
    bool support_recovered = false;
    bool shrank = true;
    std::string failure;  // nonempty: a solver guarantee raised
    bool init_rejected = false;
  };
  std::vector<Row> rows_out(static_cast<std::size_t>(trials));

  run_trials(trials, [&](Index i) {
    Row& row = rows_out[std::size_t(i)];
    const std::uint64_t trial_seed = seed + std::uint64_t(i);
    const GeneratedProblem prob =
        make_problem(rows, cols, model, rate, sparsity, noise, trial_seed);
    const ProblemInstance inst =
        normalize_instance(prob.dictionary, prob.signal, lambda, tau);
    try {
      const IstaResult ista = ista_init(inst);
      const SolveReport rep = pgd_solve(inst, ista.code, opts);
      const OracleSolution oracle = brute_force_global(inst);
      detail::WorstCertificate worst;
      for (const SparseCode& tie : oracle.ties) {
        worst.consider(pgd_gap_certificate(inst, rep.code, tie));
      }
      row.cert = worst.cert;
      row.have_cert = true;
      row.ties = Index(oracle.ties.size());
      row.iterations = rep.iterations;
      row.refined = rep.refined;
      row.shrank = rep.support_shrank_every_step;
      row.support_recovered = rep.code.support == prob.planted.support;
    } catch (const InvalidInit& e) {
      row.init_rejected = true;
      row.failure = e.what();
    } catch (const NonDecreaseDetected& e) {
      row.failure = e.what();
    }
  });

  CampaignResult out;
  Index binding = 0, violated = 0, init_rejected = 0, guarantee_failures = 0,
        recovered = 0, refined = 0;
  detail::RatioStats ratios;
  Json per_trial = Json::array();
  for (Index i = 0; i < trials; ++i) {
    const Row& row = rows_out[std::size_t(i)];
    Json r;
    r["trial"] = i;
    if (row.init_rejected) {
      ++init_rejected;
      r["init_rejected"] = true;
    } else if (!row.failure.empty()) {
      ++guarantee_failures;
      r["guarantee_failure"] = row.failure;
    } else if (row.have_cert) {
      binding += row.cert.assumptions_ok;
      violated += row.cert.violated();
      recovered += row.support_recovered;
      refined += row.refined;
      ratios.add(row.cert);
      r.update(detail::certificate_row(row.cert));
      r["ties"] = row.ties;
      r["iterations"] = row.iterations;
      r["refined"] = row.refined;
      r["support_recovered"] = row.support_recovered;
    }
    per_trial.push_back(r);
  }

  Json& j = out.report;
  j["campaign"] = "pgd_gap";
  j["params"] = Json{{"trials", trials},       {"rows", rows},
                     {"cols", cols},           {"model", to_string(model)},
                     {"rate", json_number(rate)}, {"sparsity", sparsity},
                     {"noise", json_number(noise)}, {"lambda", json_number(lambda)},
                     {"tau", json_number(tau)}, {"eps", json_number(opts.eps)}};
  j["trials"] = trials;
  j["binding"] = binding;
  j["violated"] = violated;
  j["guarantee_failures"] = guarantee_failures;
  j["init_rejected"] = init_rejected;
  j["support_recovered"] = recovered;
  j["refined"] = refined;
  j["gap_over_bound"] = ratios.summary();
  j["per_trial"] = per_trial;
  out.deterministic_violation = violated > 0 || guarantee_failures > 0;
  out.lines.push_back(
      "pgd_gap: trials=" + std::to_string(trials) + " binding=" +
      std::to_string(binding) + " violated=" + std::to_string(violated) +
      " guarantee_failures=" + std::to_string(guarantee_failures) +
      " support_recovered=" + std::to_string(recovered));
  return out;
}

// ============================================================================
// rma campaign
// ============================================================================

inline CampaignResult campaign_rma(const VerifyConfig& cfg,
                                   std::uint64_t seed) {
  using detail::pick;
  const Index trials = pick(cfg.trials, Index(25));
  const Index rows = pick(cfg.rows, Index(6));
  const Index cols = pick(cfg.cols, Index(8));
  const DictionaryModel model =
      parse_dictionary_model(pick(cfg.model, std::string("gaussian")));
  const double rate = pick(cfg.rate, 0.85);
  const Index sparsity = pick(cfg.sparsity, Index(2));
  const double noise = pick(cfg.noise, 0.05);
  const double lambda = pick(cfg.lambda, 0.02);
  const double tau = pick(cfg.tau, 1.1);
  const Index k = pick(cfg.sketch_rank, std::min(rows, Index(6)));
  const Index k0 = pick(cfg.rank_k0, Index(2));
  if (cols > 20) {
    throw RefuseEnumeration("rma campaign: cols > 20 has no oracle");
  }

  PgdOptions opts;
  opts.eps = pick(cfg.eps, 1e-12);
  opts.max_iter = pick(cfg.max_iter, Index(10000));
  opts.record_trace = false;

  struct Row {
    BoundCertificate solver, optimal, suboptimal;
    bool have_certs = false;
    bool spectral_event = false;
    double exact_sketch_error = 0.0;
    double estimate_sketch_error = 0.0;
    std::string failure;
    bool init_rejected = false;
  };
  std::vector<Row> rows_out(static_cast<std::size_t>(trials));

  run_trials(trials, [&](Index i) {
    Row& row = rows_out[std::size_t(i)];
    const std::uint64_t trial_seed = seed + std::uint64_t(i);
    const GeneratedProblem prob =
        make_problem(rows, cols, model, rate, sparsity, noise, trial_seed);
    const ProblemInstance inst =
        normalize_instance(prob.dictionary, prob.signal, lambda, tau);
    try {
      const SketchedDictionary sketch =
          range_finder(inst.dict, k, trial_seed);
      const IstaResult ista = ista_init_sketched(sketch, inst);
      const SolveReport rep = pgd_rma_solve(inst, sketch, ista.code, opts);

      ProblemInstance reduced;
      reduced.dict = Dictionary(sketch.q * sketch.w);
      reduced.signal = inst.signal;
      reduced.lambda = inst.lambda;
      reduced.tau = inst.tau;
      const OracleSolution reduced_oracle = brute_force_global(reduced);
      const OracleSolution original_oracle = brute_force_global(inst);

      RmaBoundParams params;
      params.k0 = k0;
      detail::WorstCertificate solver, optimal, suboptimal;
      for (const SparseCode& tie_r : reduced_oracle.ties) {
        for (const SparseCode& tie_o : original_oracle.ties) {
          const GapCertificates certs =
              rma_gap_bounds(inst, sketch, rep.code, tie_r, tie_o,
                             ista.code, params);
          solver.consider(certs.solver_vs_oracle);
          optimal.consider(certs.optimal);
          suboptimal.consider(certs.suboptimal);
        }
      }
      row.solver = solver.cert;
      row.optimal = optimal.cert;
      row.suboptimal = suboptimal.cert;
      row.have_certs = true;
      row.spectral_event =
          row.optimal.flags.count("spectral_event") != 0 &&
          row.optimal.flags.at("spectral_event");
      row.exact_sketch_error =
          sigma_max(inst.dict.atoms - sketch.q * sketch.w);
      row.estimate_sketch_error = sketch.spectral_residual_estimate;
    } catch (const InvalidInit& e) {
      row.init_rejected = true;
      row.failure = e.what();
    } catch (const NonDecreaseDetected& e) {
      row.failure = e.what();
    }
  });

  CampaignResult out;
  Index init_rejected = 0, guarantee_failures = 0, spectral_failures = 0;
  struct KindAgg {
    Index binding = 0, violated = 0;
    detail::RatioStats ratios;
  } agg_solver, agg_optimal, agg_suboptimal;
  auto fold = [](KindAgg& agg, const BoundCertificate& c) {
    agg.binding += c.assumptions_ok;
    agg.violated += c.violated();
    agg.ratios.add(c);
  };
  Json per_trial = Json::array();
  for (Index i = 0; i < trials; ++i) {
    const Row& row = rows_out[std::size_t(i)];
    Json r;
    r["trial"] = i;
    if (row.init_rejected) {
      ++init_rejected;
      r["init_rejected"] = true;
    } else if (!row.failure.empty()) {
      ++guarantee_failures;
      r["guarantee_failure"] = row.failure;
    } else if (row.have_certs) {
      fold(agg_solver, row.solver);
      fold(agg_optimal, row.optimal);
      fold(agg_suboptimal, row.suboptimal);
      spectral_failures += !row.spectral_event;
      r["solver_vs_oracle"] = detail::certificate_row(row.solver);
      r["optimal"] = detail::certificate_row(row.optimal);
      r["suboptimal"] = detail::certificate_row(row.suboptimal);
      r["sketch_error"] = json_number(row.exact_sketch_error);
      r["sketch_error_estimate"] = json_number(row.estimate_sketch_error);
    }
    per_trial.push_back(r);
  }

  auto kind_json = [](const KindAgg& agg) {
    Json j;
    j["binding"] = agg.binding;
    j["violated"] = agg.violated;
    j["gap_over_bound"] = agg.ratios.summary();
    return j;
  };
  Json& j = out.report;
  j["campaign"] = "rma";
  j["params"] = Json{{"trials", trials},       {"rows", rows},
                     {"cols", cols},           {"model", to_string(model)},
                     {"rate", json_number(rate)}, {"sparsity", sparsity},
                     {"noise", json_number(noise)}, {"lambda", json_number(lambda)},
                     {"tau", json_number(tau)}, {"sketch_rank", k},
                     {"rank_k0", k0},           {"eps", json_number(opts.eps)}};
  j["trials"] = trials;
  j["solver_vs_oracle"] = kind_json(agg_solver);
  j["optimal"] = kind_json(agg_optimal);
  j["suboptimal"] = kind_json(agg_suboptimal);
  j["spectral_event_failures"] = spectral_failures;
  j["guarantee_failures"] = guarantee_failures;
  j["init_rejected"] = init_rejected;
  j["per_trial"] = per_trial;
  // All three certificate kinds are deterministic once the spectral event
  // is checked exactly, which it is.
  out.deterministic_violation = guarantee_failures > 0 ||
                                agg_solver.violated > 0 ||
                                agg_optimal.violated > 0 ||
                                agg_suboptimal.violated > 0;
  out.lines.push_back(
      "rma: trials=" + std::to_string(trials) +
      " solver[binding=" + std::to_string(agg_solver.binding) + " violated=" +
      std::to_string(agg_solver.violated) + "] optimal[binding=" +
      std::to_string(agg_optimal.binding) + " violated=" +
      std::to_string(agg_optimal.violated) + "] suboptimal[binding=" +
      std::to_string(agg_suboptimal.binding) + " violated=" +
      std::to_string(agg_suboptimal.violated) + "] guarantee_failures=" +
      std::to_string(guarantee_failures));
  return out;
}

// ============================================================================
// rdr campaign
// ============================================================================

inline CampaignResult campaign_rdr(const VerifyConfig& cfg,
                                   std::uint64_t seed) {
  using detail::pick;
  const Index trials = pick(cfg.trials, Index(25));
  const Index rows = pick(cfg.rows, Index(6));
  const Index cols = pick(cfg.cols, Index(8));
  const DictionaryModel model =
      parse_dictionary_model(pick(cfg.model, std::string("gaussian")));
  const double rate = pick(cfg.rate, 0.85);
  const Index sparsity = pick(cfg.sparsity, Index(2));
  const double noise = pick(cfg.noise, 0.05);
  const double lambda = pick(cfg.lambda, 0.02);
  const double tau = pick(cfg.tau, 1.1);
  const Index m = pick(cfg.reduced_dim, Index(4));
  const JlDistribution dist =
      parse_jl_distribution(pick(cfg.distribution, std::string("gaussian")));
  const double c = pick(cfg.c, 1.0);
  const double delta = pick(cfg.delta, 0.1);
  if (cols > 20) {
    throw RefuseEnumeration("rdr campaign: cols > 20 has no oracle");
  }

  PgdOptions opts;
  opts.eps = pick(cfg.eps, 1e-12);
  opts.max_iter = pick(cfg.max_iter, Index(10000));
  opts.record_trace = false;

  struct Row {
    BoundCertificate solver, optimal, suboptimal;
    bool have_certs = false;
    std::string failure;
    bool init_rejected = false;
  };
  std::vector<Row> rows_out(static_cast<std::size_t>(trials));

  run_trials(trials, [&](Index i) {
    Row& row = rows_out[std::size_t(i)];
    const std::uint64_t trial_seed = seed + std::uint64_t(i);
    const GeneratedProblem prob =
        make_problem(rows, cols, model, rate, sparsity, noise, trial_seed);
    const ProblemInstance inst =
        normalize_instance(prob.dictionary, prob.signal, lambda, tau);
    try {
      const ReducedInstance red =
          build_reduced_instance(inst, m, dist, trial_seed);
      const IstaResult ista = ista_init(red.reduced);
      const SolveReport rep = pgd_rdr_solve(red, ista.code, opts);
      const OracleSolution reduced_oracle = brute_force_global(red.reduced);
      const OracleSolution original_oracle = brute_force_global(inst);

      RdrBoundParams params;
      params.c = c;
      params.delta = delta;
      detail::WorstCertificate solver, optimal, suboptimal;
      for (const SparseCode& tie_r : reduced_oracle.ties) {
        for (const SparseCode& tie_o : original_oracle.ties) {
          const GapCertificates certs = rdr_gap_bounds(
              inst, red, rep.code, tie_r, tie_o, ista.code, params);
          solver.consider(certs.solver_vs_oracle);
          optimal.consider(certs.optimal);
          suboptimal.consider(certs.suboptimal);
        }
      }
      row.solver = solver.cert;
      row.optimal = optimal.cert;
      row.suboptimal = suboptimal.cert;
      row.have_certs = true;
    } catch (const InvalidInit& e) {
      row.init_rejected = true;
      row.failure = e.what();
    } catch (const NonDecreaseDetected& e) {
      row.failure = e.what();
    }
  });

  CampaignResult out;
  Index init_rejected = 0, guarantee_failures = 0;
  struct KindAgg {
    Index binding = 0, violated = 0;
    detail::RatioStats ratios;
  } agg_solver, agg_optimal, agg_suboptimal;
  auto fold = [](KindAgg& agg, const BoundCertificate& cert) {
    agg.binding += cert.assumptions_ok;
    agg.violated += cert.violated();
    agg.ratios.add(cert);
  };
  Json per_trial = Json::array();
  for (Index i = 0; i < trials; ++i) {
    const Row& row = rows_out[std::size_t(i)];
    Json r;
    r["trial"] = i;
    if (row.init_rejected) {
      ++init_rejected;
      r["init_rejected"] = true;
    } else if (!row.failure.empty()) {
      ++guarantee_failures;
      r["guarantee_failure"] = row.failure;
    } else if (row.have_certs) {
      fold(agg_solver, row.solver);
      fold(agg_optimal, row.optimal);
      fold(agg_suboptimal, row.suboptimal);
      r["solver_vs_oracle"] = detail::certificate_row(row.solver);
      r["optimal"] = detail::certificate_row(row.optimal);
      r["suboptimal"] = detail::certificate_row(row.suboptimal);
    }
    per_trial.push_back(r);
  }

  // Statistical acceptance: the optimal/suboptimal certificates hold with
  // probability >= 1 - delta when binding, so their violation rate must
  // stay within delta plus binomial slack.
  const Index stat_binding = agg_optimal.binding + agg_suboptimal.binding;
  const Index stat_violated = agg_optimal.violated + agg_suboptimal.violated;
  const double stat_rate =
      stat_binding > 0 ? double(stat_violated) / double(stat_binding) : 0.0;
  const double slack = detail::binomial_slack(delta, std::max(stat_binding, Index(1)));
  const bool within = stat_rate <= delta + slack;

  auto kind_json = [](const KindAgg& agg) {
    Json j;
    j["binding"] = agg.binding;
    j["violated"] = agg.violated;
    j["gap_over_bound"] = agg.ratios.summary();
    return j;
  };
  Json& j = out.report;
  j["campaign"] = "rdr";
  j["params"] = Json{{"trials", trials},       {"rows", rows},
                     {"cols", cols},           {"model", to_string(model)},
                     {"rate", json_number(rate)}, {"sparsity", sparsity},
                     {"noise", json_number(noise)}, {"lambda", json_number(lambda)},
                     {"tau", json_number(tau)}, {"reduced_dim", m},
                     {"distribution", to_string(dist)},
                     {"c", json_number(c)},     {"delta", json_number(delta)},
                     {"eps", json_number(opts.eps)}};
  j["trials"] = trials;
  j["solver_vs_oracle"] = kind_json(agg_solver);
  j["optimal"] = kind_json(agg_optimal);
  j["suboptimal"] = kind_json(agg_suboptimal);
  j["statistical"] = Json{{"binding", stat_binding},
                          {"violated", stat_violated},
                          {"rate", json_number(stat_rate)},
                          {"delta", json_number(delta)},
                          {"slack", json_number(slack)},
                          {"within_slack", within}};
  j["guarantee_failures"] = guarantee_failures;
  j["init_rejected"] = init_rejected;
  j["per_trial"] = per_trial;
  // Only the solver-vs-oracle certificate (and the descent guarantees)
  // are deterministic here.
  out.deterministic_violation =
      guarantee_failures > 0 || agg_solver.violated > 0;
  out.lines.push_back(
      "rdr: trials=" + std::to_string(trials) +
      " solver[binding=" + std::to_string(agg_solver.binding) + " violated=" +
      std::to_string(agg_solver.violated) + "] statistical[binding=" +
      std::to_string(stat_binding) + " violated=" +
      std::to_string(stat_violated) +
      " within_slack=" + (within ? "yes" : "no") + "] guarantee_failures=" +
      std::to_string(guarantee_failures));
  return out;
}

// ============================================================================
// rangefinder campaign
// ============================================================================

inline CampaignResult campaign_rangefinder(const VerifyConfig& cfg,
                                           std::uint64_t seed) {
  using detail::pick;
  const Index trials = pick(cfg.trials, Index(100));
  const Index rows = pick(cfg.rows, Index(50));
  const Index cols = pick(cfg.cols, Index(80));
  const DictionaryModel model =
      parse_dictionary_model(pick(cfg.model, std::string("geometric")));
  const double rate = pick(cfg.rate, 0.85);
  const Index k = pick(cfg.sketch_rank, Index(10));
  const Index k0 = pick(cfg.rank_k0, Index(6));
  const double threshold = 0.06;  // acceptance cap on the failure rate

  const Matrix d = make_dictionary(rows, cols, model, rate, seed);
  const Dictionary dict(d);
  const double constant = range_finder_error_constant(d, k, k0);
  const Index p = k - k0;
  const double bound_rate = std::min(1.0, 6.0 * std::exp(-double(p)));

  std::vector<double> exact(static_cast<std::size_t>(trials)), estimate(static_cast<std::size_t>(trials));
  run_trials(trials, [&](Index i) {
    const SketchedDictionary sketch =
        range_finder(dict, k, seed + std::uint64_t(i));
    exact[std::size_t(i)] = sigma_max(d - sketch.q * sketch.w);
    estimate[std::size_t(i)] = sketch.spectral_residual_estimate;
  });

  Index failures = 0;
  double ratio_min = kInf, ratio_max = 0.0;
  Json per_trial = Json::array();
  for (Index i = 0; i < trials; ++i) {
    const double e = exact[std::size_t(i)], est = estimate[std::size_t(i)];
    failures += e > constant;
    if (e > 0.0) {
      ratio_min = std::min(ratio_min, est / e);
      ratio_max = std::max(ratio_max, est / e);
    }
    per_trial.push_back(Json{{"trial", i},
                             {"error", json_number(e)},
                             {"estimate", json_number(est)}});
  }
  const double rate_emp = double(failures) / double(trials);

  CampaignResult out;
  Json& j = out.report;
  j["campaign"] = "rangefinder";
  j["params"] = Json{{"trials", trials},       {"rows", rows},
                     {"cols", cols},           {"model", to_string(model)},
                     {"rate", json_number(rate)}, {"sketch_rank", k},
                     {"rank_k0", k0}};
  j["error_constant"] = json_number(constant);
  j["oversampling"] = p;
  j["guaranteed_rate"] = json_number(bound_rate);
  j["threshold"] = json_number(threshold);
  j["trials"] = trials;
  j["failures"] = failures;
  j["failure_rate"] = json_number(rate_emp);
  j["within_threshold"] = rate_emp <= threshold;
  j["estimate_ratio_min"] = json_number(ratio_min);
  j["estimate_ratio_max"] = json_number(ratio_max);
  j["per_trial"] = per_trial;
  out.deterministic_violation = false;  // Monte-Carlo campaign
  out.lines.push_back("rangefinder: trials=" + std::to_string(trials) +
                      " failures=" + std::to_string(failures) +
                      " constant=" + format_double(constant) +
                      " within_threshold=" +
                      (rate_emp <= threshold ? "yes" : "no"));
  return out;
}

// ============================================================================
// jl campaign
// ============================================================================

inline CampaignResult campaign_jl(const VerifyConfig& cfg,
                                  std::uint64_t seed) {
  using detail::pick;
  const Index trials = pick(cfg.trials, Index(10000));
  const Index d = pick(cfg.rows, Index(64));
  const Index m = pick(cfg.reduced_dim, Index(128));
  const double epsilon = pick(cfg.epsilon, 0.5);
  const double c = pick(cfg.c, 1.0);
  const double threshold = 0.05;  // acceptance cap per distribution
  if (!(epsilon > 0.0 && epsilon < 1.0)) {
    throw ConfigError("jl campaign: epsilon must lie in (0, 1)");
  }

  // One fixed direction for the whole campaign.
  CounterRng rng(seed, streams::misc);
  Vector v(d);
  for (Index i = 0; i < d; ++i) v[i] = rng.gaussian();
  v /= v.norm();

  const std::array<JlDistribution, 3> dists = {JlDistribution::Gaussian,
                                               JlDistribution::Sign,
                                               JlDistribution::DatabaseFriendly};
  const Index total = Index(dists.size()) * trials;
  std::vector<std::uint8_t> fail(std::size_t(total), 0);
  std::vector<double> sq_ratio(std::size_t(total), 0.0);
  run_trials(total, [&](Index i) {
    const Index which = i / trials;
    const JlTransform t =
        sample_jl(m, d, dists[std::size_t(which)], seed + std::uint64_t(i));
    const double norm = (t.t * v).norm();
    fail[std::size_t(i)] =
        (norm < (1.0 - epsilon) || norm > (1.0 + epsilon)) ? 1 : 0;
    sq_ratio[std::size_t(i)] = norm * norm;
  });

  const double guaranteed_rate =
      std::min(1.0, 2.0 * std::exp(-double(m) * epsilon * epsilon / c));

  CampaignResult out;
  Json& j = out.report;
  j["campaign"] = "jl";
  j["params"] = Json{{"trials", trials},
                     {"rows", d},
                     {"reduced_dim", m},
                     {"epsilon", json_number(epsilon)},
                     {"c", json_number(c)}};
  j["guaranteed_rate"] = json_number(guaranteed_rate);
  j["threshold"] = json_number(threshold);
  Json per_dist;
  bool all_within = true;
  for (std::size_t which = 0; which < dists.size(); ++which) {
    Index failures = 0;
    double mean_sq = 0.0;
    for (Index t = 0; t < trials; ++t) {
      const std::size_t idx = which * std::size_t(trials) + std::size_t(t);
      failures += fail[idx];
      mean_sq += sq_ratio[idx];
    }
    mean_sq /= double(trials);
    const double rate_emp = double(failures) / double(trials);
    const bool within = rate_emp <= threshold;
    all_within = all_within && within;
    per_dist[to_string(dists[which])] =
        Json{{"failures", failures},
             {"failure_rate", json_number(rate_emp)},
             {"mean_squared_norm", json_number(mean_sq)},
             {"within_threshold", within}};
    out.lines.push_back(std::string("jl[") + to_string(dists[which]) +
                        "]: trials=" + std::to_string(trials) + " failures=" +
                        std::to_string(failures) + " mean_sq=" +
                        format_double(mean_sq) + " within_threshold=" +
                        (within ? "yes" : "no"));
  }
  j["per_distribution"] = per_dist;
  j["all_within_threshold"] = all_within;
  out.deterministic_violation = false;
  return out;
}

// ============================================================================
// product campaign
// ============================================================================

inline CampaignResult campaign_product(const VerifyConfig& cfg,
                                       std::uint64_t seed) {
  using detail::pick;
  const Index trials = pick(cfg.trials, Index(500));
  const Index rows_a = pick(cfg.rows, Index(10));
  const Index inner = pick(cfg.inner, Index(30));
  const Index cols_b = pick(cfg.cols, Index(10));
  const Index m = pick(cfg.reduced_dim, Index(64));
  const double c = pick(cfg.c, 1.0);
  const double delta = pick(cfg.delta, 0.1);
  const double slack = 0.03;  // pinned binomial slack at 500 trials

  const Matrix a =
      detail::gaussian_matrix(rows_a, inner, seed, streams::gen_left_factor);
  const Matrix bmat =
      detail::gaussian_matrix(inner, cols_b, seed, streams::gen_right_factor);

  const std::array<JlDistribution, 3> dists = {JlDistribution::Gaussian,
                                               JlDistribution::Sign,
                                               JlDistribution::DatabaseFriendly};
  std::array<ProductProjectionCheck, 3> checks;
  run_trials(Index(dists.size()), [&](Index which) {
    checks[std::size_t(which)] = product_projection_check(
        a, bmat, m, dists[std::size_t(which)], c, delta, trials,
        seed + std::uint64_t(which) * std::uint64_t(trials));
  });

  CampaignResult out;
  Json& j = out.report;
  j["campaign"] = "product";
  j["params"] = Json{{"trials", trials},
                     {"rows", rows_a},
                     {"inner", inner},
                     {"cols", cols_b},
                     {"reduced_dim", m},
                     {"c", json_number(c)},
                     {"delta", json_number(delta)},
                     {"slack", json_number(slack)}};
  Json per_dist;
  bool all_within = true;
  for (std::size_t which = 0; which < dists.size(); ++which) {
    const ProductProjectionCheck& chk = checks[which];
    const bool within = chk.failure_rate <= delta + slack;
    all_within = all_within && within;
    per_dist[to_string(dists[which])] =
        Json{{"failures", chk.failures},
             {"failure_rate", json_number(chk.failure_rate)},
             {"rhs", json_number(chk.rhs)},
             {"within_threshold", within}};
    out.lines.push_back(
        std::string("product[") + to_string(dists[which]) + "]: trials=" +
        std::to_string(chk.trials) + " failures=" +
        std::to_string(chk.failures) + " within_threshold=" +
        (within ? "yes" : "no"));
  }
  j["per_distribution"] = per_dist;
  j["all_within_threshold"] = all_within;
  out.deterministic_violation = false;
  return out;
}

// ============================================================================
// Driver
// ============================================================================

inline CampaignResult run_campaign(const VerifyConfig& cfg,
                                   std::uint64_t seed) {
  if (cfg.campaign == "pgd_gap") return campaign_pgd_gap(cfg, seed);
  if (cfg.campaign == "rma") return campaign_rma(cfg, seed);
  if (cfg.campaign == "rdr") return campaign_rdr(cfg, seed);
  if (cfg.campaign == "rangefinder") return campaign_rangefinder(cfg, seed);
  if (cfg.campaign == "jl") return campaign_jl(cfg, seed);
  if (cfg.campaign == "product") return campaign_product(cfg, seed);
  throw ConfigError(
      "unknown campaign '" + cfg.campaign +
      "' (expected pgd_gap, rma, rdr, rangefinder, jl, or product)");
}

inline int run_verify(const VerifyConfig& cfg, std::uint64_t seed,
                      const std::filesystem::path& out_dir,
                      bool with_timings = true) {
  const auto t_start = std::chrono::steady_clock::now();
  CampaignResult result = run_campaign(cfg, seed);

  Json j = report_envelope("verify", seed);
  j.update(result.report);
  j["deterministic_violation"] = result.deterministic_violation;
  if (with_timings) {
    const auto t_end = std::chrono::steady_clock::now();
    j["timings"] = Json{
        {"total_ms",
         json_number(std::chrono::duration<double, std::milli>(t_end - t_start)
                         .count())}};
  }
  std::filesystem::create_directories(out_dir);
  write_report(out_dir / "report.json", j);
  for (const std::string& line : result.lines) std::cout << line << '\n';
  return result.deterministic_violation ? 1 : 0;
}

}  // namespace l0prox
