#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "l0prox/core.hpp"
#include "l0prox/rng.hpp"
#include "l0prox/types.hpp"
#include "oracle_helpers.hpp"

using namespace l0prox;

namespace {

Matrix random_matrix(Index rows, Index cols, std::uint64_t seed,
                     double scale = 1.0) {
  CounterRng rng(seed, streams::misc);
  Matrix m(rows, cols);
  for (Index j = 0; j < cols; ++j) {
    for (Index i = 0; i < rows; ++i) m(i, j) = scale * rng.gaussian();
  }
  return m;
}

Vector random_vector(Index n, std::uint64_t seed, double scale = 1.0) {
  CounterRng rng(seed + 1, streams::misc);
  Vector v(n);
  for (Index i = 0; i < n; ++i) v[i] = scale * rng.gaussian();
  return v;
}

}  // namespace

TEST_CASE("normalize_instance rescales data onto the guaranteed box") {
  const Matrix d = random_matrix(6, 9, 11, 3.0);
  const Vector x = random_vector(6, 12, 5.0);
  const ProblemInstance inst = normalize_instance(d, x, 0.05, 1.1);

  double max_col = 0.0;
  for (Index j = 0; j < inst.dict.atoms.cols(); ++j) {
    max_col = std::max(max_col, inst.dict.atoms.col(j).norm());
  }
  REQUIRE(max_col < 1.0);
  REQUIRE(inst.signal.values.norm() <= 1.0 + 1e-15);
  REQUIRE(inst.lambda == 0.05);
  REQUIRE(inst.tau == 1.1);
  REQUIRE(inst.code_scale ==
          Catch::Approx(inst.signal_scale / inst.dict_scale).epsilon(1e-15));

  // Raw-data residual of a denormalized code equals signal_scale times the
  // scaled-instance residual.
  const SparseCode z = SparseCode::from_values(random_vector(9, 13, 0.3));
  const SparseCode raw = denormalize_code(inst, z);
  const double scaled_resid = (inst.signal.values -
                               inst.dict.atoms * z.values)
                                  .norm();
  const double raw_resid = (x - d * raw.values).norm();
  REQUIRE(raw_resid ==
          Catch::Approx(inst.signal_scale * scaled_resid).margin(1e-10));
}

TEST_CASE("normalize_instance keeps already-small data unscaled") {
  Matrix d = random_matrix(5, 7, 21);
  for (Index j = 0; j < d.cols(); ++j) d.col(j) *= 0.4 / d.col(j).norm();
  Vector x = random_vector(5, 22);
  x *= 0.8 / x.norm();
  const ProblemInstance inst = normalize_instance(d, x, 0.01, 2.0);
  REQUIRE(inst.dict_scale == 1.0);
  REQUIRE(inst.signal_scale == 1.0);
  REQUIRE(inst.dict.atoms == d);
  REQUIRE(inst.signal.values == x);
}

TEST_CASE("normalize_instance validates lambda and tau") {
  const Matrix d = random_matrix(4, 5, 31);
  const Vector x = random_vector(4, 32);
  REQUIRE_THROWS_AS(normalize_instance(d, x, 0.0, 1.1), ConfigError);
  REQUIRE_THROWS_AS(normalize_instance(d, x, -1.0, 1.1), ConfigError);
  REQUIRE_THROWS_AS(normalize_instance(d, x, 0.1, 1.0), ConfigError);
  REQUIRE_THROWS_AS(normalize_instance(d, random_vector(5, 33), 0.1, 1.1),
                    DimensionError);
}

TEST_CASE("objective matches the scalar-loop reference") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const Matrix d = random_matrix(7, 10, 100 + seed);
    const Vector x = random_vector(7, 200 + seed);
    const ProblemInstance inst = normalize_instance(d, x, 0.03, 1.2);
    Vector v = random_vector(10, 300 + seed);
    v[1] = 0.0;
    v[7] = 0.0;
    const SparseCode z = SparseCode::from_values(v);
    REQUIRE(objective(inst, z) ==
            Catch::Approx(testoracle::naive_objective(
                              inst.dict.atoms, inst.signal.values, v,
                              inst.lambda))
                .epsilon(1e-13));
  }
}

TEST_CASE("thin_qr produces an orthonormal factorisation") {
  const Matrix a = random_matrix(8, 5, 41);
  const ThinQr qr = thin_qr(a);
  REQUIRE(qr.q.rows() == 8);
  REQUIRE(qr.q.cols() == 5);
  REQUIRE((qr.q.transpose() * qr.q - Matrix::Identity(5, 5)).norm() < 1e-12);
  REQUIRE((qr.q * qr.r - a).norm() < 1e-12);
  REQUIRE_FALSE(qr.rank_deficient);

  Matrix low(6, 3);
  const Vector u = random_vector(6, 42);
  low.col(0) = u;
  low.col(1) = 2.0 * u;
  low.col(2) = -0.5 * u;
  REQUIRE(thin_qr(low).rank_deficient);
  REQUIRE_THROWS_AS(thin_qr(random_matrix(3, 5, 43)), DimensionError);
}

TEST_CASE("singular values agree with Jacobi eigenvalues of the Gram matrix") {
  const Matrix a = random_matrix(9, 6, 51);
  const Vector sv = singular_values(a);
  REQUIRE(sv.size() == 6);
  for (Index i = 1; i < sv.size(); ++i) REQUIRE(sv[i - 1] >= sv[i]);

  const std::vector<double> eig =
      testoracle::jacobi_eigenvalues(a.transpose() * a);
  for (Index i = 0; i < sv.size(); ++i) {
    const double from_eig =
        std::sqrt(std::max(0.0, eig[std::size_t(5 - i)]));
    REQUIRE(sv[i] == Catch::Approx(from_eig).margin(1e-10));
  }
  REQUIRE(sigma_max(a) == Catch::Approx(sv[0]).margin(1e-12));
}

TEST_CASE("power iteration reproduces the top singular value") {
  const Matrix a = random_matrix(10, 7, 61);
  REQUIRE(spectral_norm_power(a, 500, 1e-13) ==
          Catch::Approx(sigma_max(a)).margin(1e-8));
  REQUIRE(spectral_norm_power(Matrix::Zero(4, 3)) == 0.0);
}

TEST_CASE("support set algebra") {
  const Support a = {0, 2, 5, 7};
  const Support b = {2, 3, 7, 9};
  REQUIRE(support_union(a, b) == Support{0, 2, 3, 5, 7, 9});
  REQUIRE(support_intersection(a, b) == Support{2, 7});
  REQUIRE(support_difference(a, b) == Support{0, 5});
  REQUIRE(support_symmetric_difference(a, b) == Support{0, 3, 5, 9});
  REQUIRE(support_union({}, {}).empty());
}

TEST_CASE("sparse codes track bitwise-nonzero entries") {
  Vector v(5);
  v << 1.0, 0.0, -2.5, 0.0, 1e-300;
  const SparseCode z = SparseCode::from_values(v);
  REQUIRE(z.support == Support{0, 2, 4});
  REQUIRE(z.support_size() == 3);
  REQUIRE(SparseCode::zeros(4).support.empty());
  Vector bad(2);
  bad << 1.0, std::numeric_limits<double>::quiet_NaN();
  REQUIRE_THROWS_AS(SparseCode::from_values(bad), InvalidData);
}
