// Tests for the verification machinery: the exhaustive small-instance
// oracle, the capped-penalty nonconvexity measure and local-solution
// residuals, the gap certificates, the range-finder error constant, and
// the sparse extremal eigenvalues.
#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "l0prox/core.hpp"
#include "l0prox/pgd.hpp"
#include "l0prox/randomized.hpp"
#include "l0prox/rng.hpp"
#include "l0prox/theory.hpp"
#include "oracle_helpers.hpp"

using l0prox::CounterRng;
using l0prox::Dictionary;
using l0prox::Index;
using l0prox::Matrix;
using l0prox::ProblemInstance;
using l0prox::Signal;
using l0prox::SparseCode;
using l0prox::Support;
using l0prox::Vector;

namespace {

Matrix random_matrix(Index rows, Index cols, std::uint64_t seed) {
  CounterRng rng(seed, l0prox::streams::misc);
  Matrix m(rows, cols);
  for (Index j = 0; j < cols; ++j) {
    for (Index i = 0; i < rows; ++i) {
      m(i, j) = rng.gaussian();
    }
  }
  return m;
}

Vector random_vector(Index n, std::uint64_t seed) {
  CounterRng rng(seed ^ 0x9e3779b97f4a7c15ULL, l0prox::streams::misc);
  Vector v(n);
  for (Index i = 0; i < n; ++i) {
    v(i) = rng.gaussian();
  }
  return v;
}

ProblemInstance small_instance(std::uint64_t seed, Index rows = 5,
                               Index cols = 8, double lambda = 0.02,
                               double tau = 1.1) {
  Matrix d = random_matrix(rows, cols, seed);
  Vector x = random_vector(rows, seed);
  return l0prox::normalize_instance(d, x, lambda, tau);
}

}  // namespace

TEST_CASE("nonconvexity measure pinned value at the origin") {
  // theta(0, 1) with lambda = 1, b = 0.5: max(0, 1/0.5 - 1*|0 - 0.5|) = 1.5.
  l0prox::ThetaResult r = l0prox::degree_of_nonconvexity(0.0, 1.0, 1.0, 0.5);
  REQUIRE(r.value == Catch::Approx(1.5).margin(1e-12));
  REQUIRE_FALSE(r.via_grid);
}

TEST_CASE("nonconvexity measure closed form holds in every regime") {
  // The supremum has the same closed form max(0, lambda/b - kappa ||t|-b|)
  // inside (0, b) as outside; the implementation evaluates the inside
  // region by grid, so agreement there is an independent check.
  struct Case {
    double t, kappa, lambda, b;
  };
  for (const Case& c : {Case{0.3, 1.0, 1.0, 0.5}, Case{-0.3, 1.0, 1.0, 0.5},
                        Case{0.1, 0.4, 0.7, 0.9}, Case{0.49, 2.0, 1.0, 0.5}}) {
    l0prox::ThetaResult r =
        l0prox::degree_of_nonconvexity(c.t, c.kappa, c.lambda, c.b);
    double expected =
        std::max(0.0, c.lambda / c.b - c.kappa * std::abs(std::abs(c.t) - c.b));
    REQUIRE(r.via_grid);
    REQUIRE(r.value == Catch::Approx(expected).margin(1e-6));
  }

  // Large slack drives the measure to zero.
  REQUIRE(l0prox::degree_of_nonconvexity(0.0, 1e9, 1.0, 0.5).value == 0.0);
  REQUIRE(l0prox::degree_of_nonconvexity(2.0, 1e9, 1.0, 0.5).value == 0.0);

  REQUIRE_THROWS_AS(l0prox::degree_of_nonconvexity(0.0, 1.0, 1.0, 0.0),
                    l0prox::ConfigError);
  REQUIRE_THROWS_AS(l0prox::degree_of_nonconvexity(0.0, 1.0, 0.0, 0.5),
                    l0prox::ConfigError);
  REQUIRE_THROWS_AS(l0prox::degree_of_nonconvexity(0.0, -1.0, 1.0, 0.5),
                    l0prox::ConfigError);
}

TEST_CASE("nonconvexity measure matches the definition-direct supremum") {
  CounterRng rng(515, l0prox::streams::misc);
  for (int trial = 0; trial < 30; ++trial) {
    double lambda = 0.01 + rng.uniform01();
    double b = 0.05 + rng.uniform01();
    double kappa = 0.05 + 4.0 * rng.uniform01();
    double t = 2.0 * rng.gaussian() * b;
    double got = l0prox::degree_of_nonconvexity(t, kappa, lambda, b).value;
    double want = testoracle::theta_grid(t, kappa, lambda, b);
    REQUIRE(got ==
            Catch::Approx(want).margin(1e-3 * std::max(1.0, lambda / b)));
  }
}

TEST_CASE("exhaustive oracle matches an independent enumeration") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    ProblemInstance inst = small_instance(40 + seed);
    l0prox::OracleSolution sol = l0prox::brute_force_global(inst);
    double want = testoracle::best_objective_enumerated(
        inst.dict.atoms, inst.signal.values, inst.lambda,
        std::min(inst.dim(), inst.atoms()));
    REQUIRE(sol.objective == Catch::Approx(want).margin(1e-12));
    REQUIRE(l0prox::objective(inst, sol.code) ==
            Catch::Approx(sol.objective).margin(1e-12));

    // The oracle dominates both the solver output and the zero code.
    l0prox::IstaResult ista = l0prox::ista_init(inst);
    l0prox::SolveReport rep =
        l0prox::pgd_solve(inst, ista.code, l0prox::PgdOptions{});
    REQUIRE(sol.objective <= rep.final_objective + 1e-12);
    REQUIRE(sol.objective <=
            inst.signal.values.squaredNorm() + 1e-12);
  }
}

TEST_CASE("exhaustive oracle records ties from duplicated atoms") {
  Matrix d(3, 4);
  d.col(0) << 1.0, 0.0, 0.0;
  d.col(1) << 1.0, 0.0, 0.0;  // exact duplicate of atom 0
  d.col(2) << 0.0, 1.0, 0.0;
  d.col(3) << 0.0, 0.0, 1.0;
  ProblemInstance inst;
  inst.dict = Dictionary(d);
  inst.signal = Signal((Vector(3) << 0.9, 0.0, 0.0).finished());
  inst.lambda = 0.05;
  inst.tau = 1.1;
  l0prox::OracleSolution sol = l0prox::brute_force_global(inst);
  // Either duplicated atom alone reconstructs the signal exactly.
  REQUIRE(sol.objective == Catch::Approx(0.05).margin(1e-12));
  REQUIRE(sol.ties.size() >= 2);
  REQUIRE(sol.code.support == Support{0});  // lexicographically first tie
  bool found_second = false;
  for (const auto& tie : sol.ties) {
    if (tie.support == Support{1}) found_second = true;
  }
  REQUIRE(found_second);
}

TEST_CASE("exhaustive oracle refuses oversized enumerations") {
  Matrix d = random_matrix(2, 21, 9) / 8.0;
  ProblemInstance inst;
  inst.dict = Dictionary(d);
  inst.signal = Signal(random_vector(2, 9) / 8.0);
  inst.lambda = 0.05;
  inst.tau = 1.1;
  REQUIRE_THROWS_AS(l0prox::brute_force_global(inst),
                    l0prox::RefuseEnumeration);
}

TEST_CASE("exhaustive oracle honours the support-size cap") {
  ProblemInstance inst = small_instance(77, 4, 4);
  l0prox::OracleSolution empty_only = l0prox::brute_force_global(inst, 0);
  REQUIRE(empty_only.supports_enumerated == 1);
  REQUIRE(empty_only.objective ==
          Catch::Approx(inst.signal.values.squaredNorm()).margin(1e-12));

  l0prox::OracleSolution capped = l0prox::brute_force_global(inst, 1);
  REQUIRE(capped.supports_enumerated == 5);  // empty + 4 singletons
  l0prox::OracleSolution full = l0prox::brute_force_global(inst);
  REQUIRE(full.supports_enumerated == 16);
  REQUIRE(full.objective <= capped.objective + 1e-12);
}

TEST_CASE("local-solution residual hand-computed on the identity") {
  Matrix d = Matrix::Identity(2, 2);
  Vector x(2);
  x << 1.0, 0.05;
  SparseCode z = SparseCode::from_values((Vector(2) << 1.0, 0.0).finished());
  // grad = 2(z - x) = [0, -0.1].  With b = 0.05 the zero coordinate's
  // admissible derivative range [-0.2, 0.2] absorbs the gradient: residual 0.
  REQUIRE(l0prox::local_solution_residual(d, x, 0.01, z, 0.05) ==
          Catch::Approx(0.0).margin(1e-15));
  // With b = 0.2 the range shrinks to [-0.05, 0.05]: residual 0.05.
  REQUIRE(l0prox::local_solution_residual(d, x, 0.01, z, 0.2) ==
          Catch::Approx(0.05).margin(1e-12));

  REQUIRE_THROWS_AS(l0prox::local_solution_residual(d, x, 0.01, z, 0.0),
                    l0prox::ConfigError);
  SparseCode wrong = SparseCode::zeros(3);
  REQUIRE_THROWS_AS(l0prox::local_solution_residual(d, x, 0.01, wrong, 0.5),
                    l0prox::DimensionError);
}

TEST_CASE("refined solver outputs are local solutions at the midpoint cap") {
  int checked = 0;
  for (std::uint64_t seed = 0; seed < 15; ++seed) {
    ProblemInstance inst = small_instance(60 + seed, 6, 8);
    l0prox::IstaResult ista = l0prox::ista_init(inst);
    l0prox::SolveReport rep =
        l0prox::pgd_solve(inst, ista.code, l0prox::PgdOptions{});
    if (!rep.refined) continue;
    l0prox::BInterval iv = l0prox::b_feasible_interval(inst, rep.code, rep.code);
    if (iv.empty() || !std::isfinite(iv.b_max)) continue;
    double residual =
        l0prox::local_solution_residual(inst, rep.code, iv.b_max / 2.0);
    REQUIRE(residual <= 1e-6);
    ++checked;
  }
  REQUIRE(checked >= 5);
}

TEST_CASE("feasible cap interval hand-computed on the identity") {
  Matrix d = Matrix::Identity(2, 2);
  ProblemInstance inst;
  inst.dict = Dictionary(d);
  inst.signal = Signal((Vector(2) << 1.0, 0.05).finished());
  inst.lambda = 0.01;
  inst.tau = 1.1;
  SparseCode zhat = SparseCode::from_values((Vector(2) << 1.0, 0.0).finished());

  // grad(zhat) = [0, -0.1]: off-support cap = 0.01/0.1 = 0.1; min magnitude 1.
  l0prox::BInterval iv = l0prox::b_feasible_interval(inst, zhat, zhat);
  REQUIRE(iv.terms[0] == Catch::Approx(1.0).margin(1e-15));
  REQUIRE(iv.terms[1] == Catch::Approx(0.1).margin(1e-12));
  REQUIRE(iv.b_max == Catch::Approx(0.1).margin(1e-12));
  REQUIRE_FALSE(iv.empty());

  // Full support: no off-support coordinates, so those caps are +inf and
  // the minimum support magnitude 0.05 rules.
  SparseCode full = SparseCode::from_values(inst.signal.values);
  l0prox::BInterval iv2 = l0prox::b_feasible_interval(inst, full, full);
  REQUIRE(iv2.b_max == Catch::Approx(0.05).margin(1e-12));
}

TEST_CASE("gap certificate is tight when solver and oracle coincide") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    ProblemInstance inst = small_instance(80 + seed, 6, 8);
    l0prox::OracleSolution sol = l0prox::brute_force_global(inst);
    l0prox::BoundCertificate cert =
        l0prox::pgd_gap_certificate(inst, sol.code, sol.code);
    REQUIRE(cert.kind == "pgd_gap");
    REQUIRE(cert.actual_gap == 0.0);
    REQUIRE(cert.difference.empty());
    REQUIRE(cert.bound_value == Catch::Approx(0.0).margin(1e-15));
    REQUIRE_FALSE(cert.violated());
  }
}

TEST_CASE("gap certificate between solver output and the global optimum") {
  int binding = 0;
  for (std::uint64_t seed = 0; seed < 25; ++seed) {
    ProblemInstance inst = small_instance(120 + seed, 6, 8);
    l0prox::IstaResult ista = l0prox::ista_init(inst);
    l0prox::SolveReport rep =
        l0prox::pgd_solve(inst, ista.code, l0prox::PgdOptions{});
    l0prox::OracleSolution sol = l0prox::brute_force_global(inst);

    // The certificate must hold against every tied optimum it binds for.
    for (const SparseCode& star : sol.ties) {
      l0prox::BoundCertificate cert =
          l0prox::pgd_gap_certificate(inst, rep.code, star);
      REQUIRE_FALSE(cert.violated(1e-9));
      if (cert.assumptions_ok) {
        ++binding;
        REQUIRE(cert.actual_gap <= cert.bound_value + 1e-9);
      }
    }
  }
  REQUIRE(binding >= 5);
}

TEST_CASE("gap certificate flags inadmissible slack and non-local points") {
  ProblemInstance inst = small_instance(99, 6, 8);
  l0prox::OracleSolution sol = l0prox::brute_force_global(inst);

  l0prox::PgdGapParams params;
  params.kappa = 1e9;  // far above kappa0^2
  l0prox::BoundCertificate cert =
      l0prox::pgd_gap_certificate(inst, sol.code, sol.code, params);
  REQUIRE_FALSE(cert.flags.at("kappa_admissible"));
  REQUIRE_FALSE(cert.assumptions_ok);
  REQUIRE_FALSE(cert.violated());  // non-binding certificates never violate

  // A perturbed "optimum" is not a local solution; the certificate must
  // notice rather than report a violation.
  Vector bumped = sol.code.values;
  if (!sol.code.support.empty()) {
    bumped[sol.code.support.front()] *= 0.5;
    SparseCode fake = SparseCode::from_values(bumped);
    l0prox::BoundCertificate c2 =
        l0prox::pgd_gap_certificate(inst, sol.code, fake);
    REQUIRE_FALSE(c2.flags.at("zstar_local_solution"));
    REQUIRE_FALSE(c2.violated());
  }
}

TEST_CASE("gap certificate of two zero codes degenerates cleanly") {
  ProblemInstance inst = small_instance(101, 4, 6);
  SparseCode zero = SparseCode::zeros(6);
  l0prox::BoundCertificate cert =
      l0prox::pgd_gap_certificate(inst, zero, zero);
  REQUIRE(cert.bound_value == 0.0);
  REQUIRE(cert.actual_gap == 0.0);
  REQUIRE(cert.assumptions_ok);
  REQUIRE_FALSE(cert.violated());
}

TEST_CASE("range-finder error constant pinned formula") {
  Vector sigma(5);
  sigma << 1.0, 0.5, 0.1, 0.01, 0.0;
  // k = 6, k0 = 2, p = 4: C = (1 + 17 sqrt(1.5)) * 0.1
  //                         + (8 sqrt(6) / 5) * sqrt(0.1^2 + 0.01^2 + 0).
  double expected = (1.0 + 17.0 * std::sqrt(1.5)) * 0.1 +
                    (8.0 * std::sqrt(6.0) / 5.0) * std::sqrt(0.0101);
  REQUIRE(l0prox::range_finder_error_constant(sigma, 6, 2) ==
          Catch::Approx(expected).epsilon(1e-14));

  // A spectrum that dies before k0 makes the constant exactly zero.
  Vector dead(6);
  dead << 1.0, 0.5, 0.0, 0.0, 0.0, 0.0;
  REQUIRE(l0prox::range_finder_error_constant(dead, 6, 2) == 0.0);

  REQUIRE_THROWS_AS(l0prox::range_finder_error_constant(sigma, 6, 1),
                    l0prox::HypothesisError);
  REQUIRE_THROWS_AS(l0prox::range_finder_error_constant(sigma, 5, 2),
                    l0prox::HypothesisError);
}

TEST_CASE("range-finder error constant shrinks as the target rank grows") {
  Vector sigma(20);
  for (Index i = 0; i < 20; ++i) {
    sigma[i] = std::pow(0.85, double(i));
  }
  // Fixed oversampling p = 4: larger k0 sees a smaller tail.
  double prev = l0prox::kInf;
  for (Index k0 : {2, 4, 6, 8, 10}) {
    double c = l0prox::range_finder_error_constant(sigma, k0 + 4, k0);
    REQUIRE(c < prev);
    prev = c;
  }
}

TEST_CASE("range-finder error constant accepts a matrix argument") {
  Matrix d = random_matrix(6, 9, 314) / 3.0;
  REQUIRE(l0prox::range_finder_error_constant(d, 6, 2) ==
          Catch::Approx(l0prox::range_finder_error_constant(
                            l0prox::singular_values(d), 6, 2))
              .epsilon(1e-14));
}

TEST_CASE("sparse extremal eigenvalues on orthonormal and general atoms") {
  // Identity: every restricted Gram matrix is the identity.
  l0prox::SparseSpectrum id = l0prox::sparse_eigenvalues(Matrix::Identity(4, 4), 2);
  REQUIRE(id.lower == Catch::Approx(1.0).margin(1e-12));
  REQUIRE(id.upper == Catch::Approx(1.0).margin(1e-12));

  // m = 1: extremal squared column norms.
  Matrix d = random_matrix(5, 7, 271) / 3.0;
  l0prox::SparseSpectrum one = l0prox::sparse_eigenvalues(d, 1);
  double lo = l0prox::kInf, hi = 0.0;
  for (Index j = 0; j < d.cols(); ++j) {
    double n2 = d.col(j).squaredNorm();
    lo = std::min(lo, n2);
    hi = std::max(hi, n2);
  }
  REQUIRE(one.lower == Catch::Approx(lo).epsilon(1e-12));
  REQUIRE(one.upper == Catch::Approx(hi).epsilon(1e-12));

  // m = 2 against an independent Jacobi eigensolve of each restricted Gram.
  Matrix d2 = random_matrix(5, 8, 272) / 3.0;
  l0prox::SparseSpectrum got = l0prox::sparse_eigenvalues(d2, 2);
  double want_lo = l0prox::kInf, want_hi = 0.0;
  for (Index a = 0; a < 8; ++a) {
    for (Index b = a + 1; b < 8; ++b) {
      Matrix sub(5, 2);
      sub.col(0) = d2.col(a);
      sub.col(1) = d2.col(b);
      std::vector<double> eig =
          testoracle::jacobi_eigenvalues(sub.transpose() * sub);
      want_lo = std::min(want_lo, eig.front());
      want_hi = std::max(want_hi, eig.back());
    }
  }
  REQUIRE(got.lower == Catch::Approx(want_lo).margin(1e-10));
  REQUIRE(got.upper == Catch::Approx(want_hi).margin(1e-10));

  // Supports wider than the ambient dimension are singular by construction.
  Matrix wide = random_matrix(3, 5, 273);
  REQUIRE(l0prox::sparse_eigenvalues(wide, 4).lower == 0.0);

  REQUIRE_THROWS_AS(l0prox::sparse_eigenvalues(d, 0), l0prox::ConfigError);
  REQUIRE_THROWS_AS(l0prox::sparse_eigenvalues(d, 8), l0prox::ConfigError);
  REQUIRE_THROWS_AS(l0prox::sparse_eigenvalues(random_matrix(2, 21, 274), 2),
                    l0prox::RefuseEnumeration);
}

TEST_CASE("quadratic gradient matches the naive loop") {
  Matrix d = random_matrix(5, 7, 661);
  Vector x = random_vector(5, 662);
  Vector z = random_vector(7, 663);
  Vector got = l0prox::quadratic_gradient(d, x, z);
  for (Index j = 0; j < 7; ++j) {
    double acc = 0.0;
    for (Index i = 0; i < 5; ++i) {
      double resid_i = 0.0;
      for (Index k = 0; k < 7; ++k) resid_i += d(i, k) * z[k];
      resid_i -= x[i];
      acc += d(i, j) * resid_i;
    }
    REQUIRE(got[j] == Catch::Approx(2.0 * acc).margin(1e-12));
    REQUIRE(l0prox::quadratic_gradient_entry(d, d * z - x, j) ==
            Catch::Approx(2.0 * acc).margin(1e-12));
  }
}

TEST_CASE("sketched-pipeline certificates have the stated structure") {
  ProblemInstance inst = small_instance(404, 6, 8);
  l0prox::IstaResult ista = l0prox::ista_init(inst);
  l0prox::SketchedDictionary sk = l0prox::range_finder(inst.dict, 6, 11);
  l0prox::SolveReport rep =
      l0prox::pgd_rma_solve(inst, sk, ista.code, l0prox::PgdOptions{});

  ProblemInstance sketched;
  sketched.dict = Dictionary(sk.q * sk.w);
  sketched.signal = inst.signal;
  sketched.lambda = inst.lambda;
  sketched.tau = inst.tau;
  l0prox::OracleSolution tilde = l0prox::brute_force_global(sketched);
  l0prox::OracleSolution star = l0prox::brute_force_global(inst);

  l0prox::GapCertificates certs = l0prox::rma_gap_bounds(
      inst, sk, rep.code, tilde.code, star.code, ista.code);

  REQUIRE(certs.solver_vs_oracle.kind == "rma_solver_gap");
  REQUIRE(certs.optimal.kind == "rma_optimal_gap");
  REQUIRE(certs.suboptimal.kind == "rma_suboptimal_gap");

  // All three are deterministic statements conditioned on the draw.
  REQUIRE_FALSE(certs.solver_vs_oracle.probabilistic);
  REQUIRE_FALSE(certs.optimal.probabilistic);
  REQUIRE_FALSE(certs.suboptimal.probabilistic);

  // The end-to-end bound is the sum of the two legs.
  REQUIRE(certs.suboptimal.bound_value ==
          Catch::Approx(certs.b1 + certs.b2).margin(1e-15));
  REQUIRE(certs.suboptimal.flags.count("solver_slack_admissible") == 1);
  REQUIRE(certs.suboptimal.flags.count("sketch_spectral_event") == 1);

  // A full-rank sketch realizes the spectral event exactly.
  REQUIRE(certs.optimal.details.at("spectral_actual") <= 1e-10);
  REQUIRE(certs.optimal.flags.at("spectral_event"));

  // None of the three may be violated while binding.
  REQUIRE_FALSE(certs.solver_vs_oracle.violated(1e-9));
  REQUIRE_FALSE(certs.optimal.violated(1e-9));
  REQUIRE_FALSE(certs.suboptimal.violated(1e-9));
}

TEST_CASE("reduced-pipeline certificates mark the statistical legs") {
  ProblemInstance inst = small_instance(505, 6, 8);
  l0prox::IstaResult ista = l0prox::ista_init(inst);
  l0prox::ReducedInstance red = l0prox::build_reduced_instance(
      inst, 16, l0prox::JlDistribution::Gaussian, 21);

  SparseCode init = SparseCode::zeros(8);
  if (l0prox::residual_norm(red.reduced, init) > 1.0) {
    init = ista.code;  // fall back; may be rejected below, which is fine
  }
  l0prox::SolveReport rep;
  try {
    rep = l0prox::pgd_rdr_solve(red, init, l0prox::PgdOptions{});
  } catch (const l0prox::InvalidInit&) {
    l0prox::PgdOptions lip;
    lip.step.mode = l0prox::StepMode::Lipschitz;
    rep = l0prox::pgd_rdr_solve(red, init, lip);
  }

  l0prox::OracleSolution bar = l0prox::brute_force_global(red.reduced);
  l0prox::OracleSolution star = l0prox::brute_force_global(inst);

  l0prox::RdrBoundParams params;
  params.c = 1.0;
  params.delta = 0.1;
  l0prox::GapCertificates certs = l0prox::rdr_gap_bounds(
      inst, red, rep.code, bar.code, star.code, init, params);

  REQUIRE(certs.solver_vs_oracle.kind == "rdr_solver_gap");
  REQUIRE(certs.optimal.kind == "rdr_optimal_gap");
  REQUIRE(certs.suboptimal.kind == "rdr_suboptimal_gap");

  REQUIRE_FALSE(certs.solver_vs_oracle.probabilistic);
  REQUIRE(certs.optimal.probabilistic);
  REQUIRE(certs.suboptimal.probabilistic);
  REQUIRE(certs.optimal.delta == 0.1);

  // m = 16 satisfies m >= 4 c log(4/delta) ~ 14.76 at c = 1.
  REQUIRE(certs.optimal.flags.at("m_large_enough"));
  REQUIRE(certs.suboptimal.bound_value ==
          Catch::Approx(certs.b1 + certs.b2).margin(1e-15));
  REQUIRE(certs.suboptimal.flags.count("reduction_m_large_enough") == 1);

  // The statistical term is recorded for inspection.
  REQUIRE(certs.optimal.details.count("statistical_term") == 1);
  REQUIRE(certs.optimal.details.count("m1") == 1);

  // The deterministic leg must never be violated.
  REQUIRE_FALSE(certs.solver_vs_oracle.violated(1e-9));
}

TEST_CASE("below the sample-size threshold the statistical legs unbind") {
  ProblemInstance inst = small_instance(606, 6, 8);
  l0prox::ReducedInstance red = l0prox::build_reduced_instance(
      inst, 4, l0prox::JlDistribution::Gaussian, 33);
  SparseCode zero = SparseCode::zeros(8);
  l0prox::OracleSolution bar = l0prox::brute_force_global(red.reduced);
  l0prox::OracleSolution star = l0prox::brute_force_global(inst);
  l0prox::GapCertificates certs =
      l0prox::rdr_gap_bounds(inst, red, bar.code, bar.code, star.code, zero);
  REQUIRE_FALSE(certs.optimal.flags.at("m_large_enough"));
  REQUIRE_FALSE(certs.optimal.assumptions_ok);
  REQUIRE_FALSE(certs.optimal.violated());
}
