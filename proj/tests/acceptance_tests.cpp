// Acceptance gate: ten end-to-end checks, each printing exactly one
// PASS/FAIL line with its elapsed time.  Every check carries a wall-clock
// budget; exceeding it fails the check even when the assertions hold.
// argv[1] must be the path to the command-line binary, which the report
// determinism check invokes twice under different thread budgets.
// The exit code is the number of failed checks.

#include <bit>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <sys/wait.h>
#include <vector>

#include "l0prox/cli/bench.hpp"
#include "l0prox/cli/gen.hpp"
#include "l0prox/cli/verify.hpp"
#include "l0prox/core.hpp"
#include "l0prox/errors.hpp"
#include "l0prox/pgd.hpp"
#include "l0prox/randomized.hpp"
#include "l0prox/rng.hpp"
#include "l0prox/theory.hpp"

#include "oracle_helpers.hpp"

namespace {

namespace fs = std::filesystem;
using l0prox::Index;
using l0prox::Json;
using l0prox::Matrix;
using l0prox::ProblemInstance;
using l0prox::SparseCode;
using l0prox::Vector;

std::string g_cli_binary;
const fs::path g_scratch = "acceptance_scratch";

struct Outcome {
  bool ok = true;
  std::string detail;

  void fail(const std::string& why) {
    ok = false;
    if (!detail.empty()) detail += "; ";
    detail += why;
  }
  void note(const std::string& info) {
    if (!detail.empty()) detail += "; ";
    detail += info;
  }
};

bool same_bits(double a, double b) {
  return std::bit_cast<std::uint64_t>(a) == std::bit_cast<std::uint64_t>(b);
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return {};
  return std::string(std::istreambuf_iterator<char>(in),
                     std::istreambuf_iterator<char>());
}

/// Run one check under its time budget and print the single summary line.
bool run_check(int number, const std::string& name, double budget_seconds,
               const std::function<Outcome()>& check) {
  using clock = std::chrono::steady_clock;
  const auto t0 = clock::now();
  Outcome out;
  try {
    out = check();
  } catch (const std::exception& e) {
    out.ok = false;
    out.detail = std::string("exception: ") + e.what();
  }
  const double elapsed =
      std::chrono::duration<double>(clock::now() - t0).count();
  if (elapsed > budget_seconds) {
    out.fail("exceeded the " + std::to_string(budget_seconds) +
             "s budget");
  }
  std::printf("[%2d/10] %s  %6.2fs  %s%s%s\n", number,
              out.ok ? "PASS" : "FAIL", elapsed, name.c_str(),
              out.detail.empty() ? "" : " -- ", out.detail.c_str());
  std::fflush(stdout);
  return out.ok;
}

ProblemInstance random_instance(Index rows, Index cols, std::uint64_t seed,
                                double lambda = 0.02, double tau = 1.1) {
  const l0prox::GeneratedProblem prob = l0prox::make_problem(
      rows, cols, l0prox::DictionaryModel::GaussianAtoms, 0.85, 2, 0.05, seed);
  return l0prox::normalize_instance(prob.dictionary, prob.signal, lambda, tau);
}

// ---------------------------------------------------------------------------
// 1. Scalar proximal decisions match an independent two-candidate rule.
// ---------------------------------------------------------------------------
Outcome check_proximal_map() {
  Outcome out;
  // A 1x1 zero dictionary makes the gradient step the identity, so the
  // proximal map reduces to the scalar decision the candidate rule solves.
  ProblemInstance inst;
  inst.dict = l0prox::Dictionary(Matrix::Zero(1, 1));
  inst.signal = l0prox::Signal(Vector::Zero(1));
  l0prox::CounterRng rng(2026, l0prox::streams::misc);
  Index mismatches = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    const double t = 6.0 * (rng.uniform01() - 0.5);
    inst.lambda = 0.001 + rng.uniform01();
    inst.tau = 1.0 + 1e-6 + rng.uniform01();
    const double s = 0.1 + 2.0 * rng.uniform01();
    const SparseCode z = SparseCode::from_values(Vector::Constant(1, t));
    const SparseCode got = l0prox::proximal_map(inst, z, s);
    const double want =
        testoracle::prox_candidate(t, inst.lambda, inst.tau, s);
    if (!same_bits(got.values[0], want)) ++mismatches;
  }
  if (mismatches > 0) {
    out.fail(std::to_string(mismatches) + " of 1000 draws disagreed");
  } else {
    out.note("1000 draws bit-identical");
  }
  return out;
}

// ---------------------------------------------------------------------------
// 2. Support-safe descent keeps both of its per-step guarantees.
// ---------------------------------------------------------------------------
Outcome check_shrinkage_guarantees() {
  Outcome out;
  Index violations = 0, runs = 0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const ProblemInstance inst = random_instance(6, 10, 9000 + seed);
    try {
      const l0prox::IstaResult ista = l0prox::ista_init(inst);
      l0prox::PgdOptions opts;
      opts.record_trace = true;
      const l0prox::SolveReport rep = l0prox::pgd_solve(inst, ista.code, opts);
      ++runs;
      const double coeff = (inst.tau - 1.0) * rep.s_used / 2.0;
      bool bad = !rep.support_shrank_every_step;
      for (std::size_t i = 1; i < rep.trace.size(); ++i) {
        const auto& prev = rep.trace[i - 1];
        const auto& cur = rep.trace[i];
        if (cur.support_size > prev.support_size) bad = true;
        if (cur.objective >
            prev.objective - coeff * cur.step_norm * cur.step_norm + 1e-10) {
          bad = true;
        }
      }
      violations += bad;
    } catch (const l0prox::Error&) {
      ++violations;  // a raised guarantee is a violation here
    }
  }
  if (violations > 0) {
    out.fail(std::to_string(violations) + " of 100 runs violated a guarantee");
  } else {
    out.note("100 runs clean (" + std::to_string(runs) + " traced)");
  }
  return out;
}

// ---------------------------------------------------------------------------
// 3. Converged outputs are fixed points and local solutions at b_max / 2.
// ---------------------------------------------------------------------------
Outcome check_fixed_points() {
  Outcome out;
  Index fixed_failures = 0, residual_failures = 0, skipped = 0, checked = 0;
  // Same instance family as the per-step guarantee check above.
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const ProblemInstance inst = random_instance(6, 10, 9000 + seed);
    const l0prox::IstaResult ista = l0prox::ista_init(inst);
    const l0prox::SolveReport rep = l0prox::pgd_solve(inst, ista.code);
    const SparseCode again = l0prox::proximal_map(inst, rep.code, rep.s_used);
    if ((again.values - rep.code.values).norm() > 1e-8) {
      ++fixed_failures;
    }
    const l0prox::BInterval iv =
        l0prox::b_feasible_interval(inst, rep.code, rep.code);
    if (rep.code.support_size() == 0 || iv.empty() ||
        !std::isfinite(iv.b_max)) {
      ++skipped;
      continue;
    }
    ++checked;
    if (l0prox::local_solution_residual(inst, rep.code, iv.b_max / 2.0) >
        1e-6) {
      ++residual_failures;
    }
  }
  if (fixed_failures > 0) {
    out.fail(std::to_string(fixed_failures) + " outputs moved under the map");
  }
  if (residual_failures > 0) {
    out.fail(std::to_string(residual_failures) + " residuals above 1e-6");
  }
  if (checked < 10) {
    out.fail("only " + std::to_string(checked) + " instances were checkable");
  }
  if (out.ok) {
    out.note("checked=" + std::to_string(checked) +
             " skipped=" + std::to_string(skipped));
  }
  return out;
}

// ---------------------------------------------------------------------------
// 4. Solver-vs-oracle gap bounds hold on exhaustively solved instances.
// ---------------------------------------------------------------------------
Outcome check_gap_bounds() {
  Outcome out;
  l0prox::VerifyConfig cfg;
  cfg.campaign = "pgd_gap";  // pinned defaults: 50 trials, 6 x 8
  const l0prox::CampaignResult res = l0prox::campaign_pgd_gap(cfg, 20260814);
  const Index binding = res.report.at("binding").get<Index>();
  const Index violated = res.report.at("violated").get<Index>();
  const Index failures = res.report.at("guarantee_failures").get<Index>();
  if (res.deterministic_violation) {
    out.fail("violated=" + std::to_string(violated) +
             " guarantee_failures=" + std::to_string(failures));
  }
  if (binding < 5) {
    out.fail("bound only bound on " + std::to_string(binding) +
             " of 50 trials");
  }
  if (out.ok) {
    out.note("50 trials, binding=" + std::to_string(binding) +
             ", violated=0");
  }
  return out;
}

// ---------------------------------------------------------------------------
// 5. Range-finder error exceeds its constant in at most 6% of draws.
// ---------------------------------------------------------------------------
Outcome check_range_finder_rate() {
  Outcome out;
  l0prox::VerifyConfig cfg;
  cfg.campaign = "rangefinder";  // pinned: 100 draws, 50 x 80, k=10, k0=6
  const l0prox::CampaignResult res = l0prox::campaign_rangefinder(cfg, 123);
  const Index failures = res.report.at("failures").get<Index>();
  if (!res.report.at("within_threshold").get<bool>()) {
    out.fail(std::to_string(failures) + " of 100 draws exceeded the constant");
  } else {
    out.note("failures=" + std::to_string(failures) + "/100 (cap 6)");
  }
  return out;
}

// ---------------------------------------------------------------------------
// 6. All three projection families keep norms within the failure budget.
// ---------------------------------------------------------------------------
Outcome check_norm_preservation() {
  Outcome out;
  l0prox::VerifyConfig cfg;
  cfg.campaign = "jl";  // pinned: 10^4 trials, d=64, m=128, epsilon=0.5
  const l0prox::CampaignResult res = l0prox::campaign_jl(cfg, 7);
  for (const auto& [dist, row] : res.report.at("per_distribution").items()) {
    if (!row.at("within_threshold").get<bool>()) {
      out.fail(dist + " failed " + row.at("failures").dump() + " of 10000");
    }
  }
  if (out.ok) out.note("three families within the 5% cap");
  return out;
}

// ---------------------------------------------------------------------------
// 7. Projected products stay within their failure budget.
// ---------------------------------------------------------------------------
Outcome check_product_projection() {
  Outcome out;
  l0prox::VerifyConfig cfg;
  cfg.campaign = "product";  // pinned: 500 trials, m=64, delta=0.1, slack 0.03
  const l0prox::CampaignResult res = l0prox::campaign_product(cfg, 99);
  for (const auto& [dist, row] : res.report.at("per_distribution").items()) {
    if (!row.at("within_threshold").get<bool>()) {
      out.fail(dist + " rate " + row.at("failure_rate").dump() +
               " above 0.1 + 0.03");
    }
  }
  if (out.ok) out.note("three families within delta + slack");
  return out;
}

// ---------------------------------------------------------------------------
// 8. Sketched and reduced solver bounds hold across their campaigns.
// ---------------------------------------------------------------------------
Outcome check_randomized_bounds() {
  Outcome out;
  {
    l0prox::VerifyConfig cfg;
    cfg.campaign = "rma";  // pinned defaults: 25 trials, 6 x 8
    const l0prox::CampaignResult res = l0prox::campaign_rma(cfg, 40);
    if (res.deterministic_violation) {
      out.fail("sketched campaign had a binding violation");
    }
  }
  {
    l0prox::VerifyConfig cfg;
    cfg.campaign = "rdr";  // default reduced_dim: statistical legs vacuous
    const l0prox::CampaignResult res = l0prox::campaign_rdr(cfg, 41);
    if (res.deterministic_violation) {
      out.fail("reduced campaign (default m) had a deterministic violation");
    }
    if (!res.report.at("statistical").at("within_slack").get<bool>()) {
      out.fail("reduced campaign (default m) exceeded delta + slack");
    }
  }
  {
    l0prox::VerifyConfig cfg;
    cfg.campaign = "rdr";
    cfg.reduced_dim = 16;  // large enough for the statistical legs to bind
    const l0prox::CampaignResult res = l0prox::campaign_rdr(cfg, 42);
    const auto& stat = res.report.at("statistical");
    if (res.deterministic_violation) {
      out.fail("reduced campaign (m=16) had a deterministic violation");
    }
    if (!stat.at("within_slack").get<bool>()) {
      out.fail("reduced campaign (m=16) exceeded delta + slack");
    }
    const Index stat_binding = stat.at("binding").get<Index>();
    if (stat_binding < 5) {
      out.fail("statistical legs bound only " + std::to_string(stat_binding) +
               " times at m=16");
    }
    if (out.ok) {
      out.note("rma clean; rdr statistical binding=" +
               std::to_string(stat_binding) + " violated=" +
               stat.at("violated").dump() + " at m=16");
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// 9. Randomized kernels at least halve the gradient-step cost at scale.
// ---------------------------------------------------------------------------
Outcome check_kernel_speed() {
  Outcome out;
  l0prox::BenchConfig cfg;
  cfg.rows = 4096;
  cfg.cols = 512;
  cfg.iterations = 200;
  cfg.repetitions = 5;
  cfg.k_sweep = {32};
  cfg.m_sweep = {256};
  const fs::path dir = g_scratch / "bench";
  if (l0prox::run_bench(cfg, 5, dir, /*with_timings=*/false) != 0) {
    out.fail("bench run returned nonzero");
    return out;
  }
  const Json report = Json::parse(slurp(dir / "report.json"));
  const double pgd_us = report.at("pgd").at("median_us").get<double>();
  const double rma_us = report.at("rma")[0].at("median_us").get<double>();
  const double rdr_us = report.at("rdr")[0].at("median_us").get<double>();
  if (!report.at("pgd").at("reliable").get<bool>()) {
    out.fail("baseline timing below the reliability floor");
  }
  if (!(rma_us <= 0.5 * pgd_us)) {
    out.fail("sketched step " + std::to_string(rma_us) + "us vs baseline " +
             std::to_string(pgd_us) + "us");
  }
  if (!(rdr_us <= 0.5 * pgd_us)) {
    out.fail("reduced step " + std::to_string(rdr_us) + "us vs baseline " +
             std::to_string(pgd_us) + "us");
  }
  if (out.ok) {
    std::ostringstream os;
    os.setf(std::ios::fixed);
    os.precision(0);
    os << "baseline " << pgd_us << "us, sketched " << rma_us
       << "us, reduced " << rdr_us << "us";
    out.note(os.str());
  }
  return out;
}

// ---------------------------------------------------------------------------
// 10. Repeated verification produces byte-identical reports.
// ---------------------------------------------------------------------------
int run_cli(const std::string& threads, const std::string& args) {
  const std::string cmd = "L0PROX_THREADS=" + threads + " '" + g_cli_binary +
                          "' " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  if (status == -1 || !WIFEXITED(status)) return -1;
  return WEXITSTATUS(status);
}

Outcome check_report_determinism() {
  Outcome out;
  if (g_cli_binary.empty()) {
    out.fail("no CLI binary path was supplied");
    return out;
  }
  const fs::path dir_a = g_scratch / "verify_a";
  const fs::path dir_b = g_scratch / "verify_b";
  const std::string base =
      "verify pgd_gap --trials 10 --rows 5 --cols 6 --seed 33 --no-timings";
  const int rc_a = run_cli("1", base + " --out '" + dir_a.string() + "'");
  const int rc_b = run_cli("4", base + " --out '" + dir_b.string() + "'");
  if (rc_a != 0 || rc_b != 0) {
    out.fail("CLI exits " + std::to_string(rc_a) + " and " +
             std::to_string(rc_b) + " (want 0)");
    return out;
  }
  const std::string bytes_a = slurp(dir_a / "report.json");
  const std::string bytes_b = slurp(dir_b / "report.json");
  if (bytes_a.empty()) {
    out.fail("first run produced no report");
  } else if (bytes_a != bytes_b) {
    out.fail("reports differ between thread budgets");
  } else {
    out.note(std::to_string(bytes_a.size()) + " bytes identical");
  }
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  if (argc > 1) g_cli_binary = argv[1];
  std::error_code ec;
  fs::remove_all(g_scratch, ec);
  fs::create_directories(g_scratch, ec);

  int failures = 0;
  failures += !run_check(
      1, "scalar proximal decisions match the two-candidate rule", 1.0,
      check_proximal_map);
  failures += !run_check(
      2, "support-safe descent keeps its per-step guarantees", 10.0,
      check_shrinkage_guarantees);
  failures += !run_check(
      3, "converged outputs are fixed points and local solutions", 10.0,
      check_fixed_points);
  failures += !run_check(
      4, "gap bounds hold against exhaustive enumeration", 60.0,
      check_gap_bounds);
  failures += !run_check(
      5, "range-finder failure rate stays within 6%", 30.0,
      check_range_finder_rate);
  failures += !run_check(
      6, "norm preservation holds for all projection families", 60.0,
      check_norm_preservation);
  failures += !run_check(
      7, "projected products stay within the failure budget", 30.0,
      check_product_projection);
  failures += !run_check(
      8, "sketched and reduced solver bounds hold in campaign", 120.0,
      check_randomized_bounds);
  failures += !run_check(
      9, "randomized kernels at least halve the step cost", 120.0,
      check_kernel_speed);
  failures += !run_check(
      10, "repeated verification is byte-identical", 60.0,
      check_report_determinism);

  if (failures == 0) {
    std::printf("all 10 acceptance checks passed\n");
  } else {
    std::printf("%d acceptance check(s) failed\n", failures);
  }
  return failures;
}
