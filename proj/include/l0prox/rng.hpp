#pragma once

// Counter-based pseudo-random generation.
//
// Everything stochastic in the library flows through CounterRng, a
// Philox4x32-10 generator.  Counter-based generation gives the two
// properties the reproducibility contract needs:
//   * a draw is a pure function of (seed, stream, counter) -- no hidden
//     state, so parallel trials can derive independent streams cheaply;
//   * the integer pipeline plus an inverse-CDF Gaussian transform uses
//     only IEEE double arithmetic, so identical seeds give bit-identical
//     samples across runs.

#include <array>
#include <cmath>
#include <cstdint>
#include <limits>

#include "l0prox/errors.hpp"

namespace l0prox {

namespace detail {

inline constexpr std::uint32_t kPhiloxM0 = 0xD2511F53u;
inline constexpr std::uint32_t kPhiloxM1 = 0xCD9E8D57u;
inline constexpr std::uint32_t kPhiloxW0 = 0x9E3779B9u;
inline constexpr std::uint32_t kPhiloxW1 = 0xBB67AE85u;

inline void philox_round(std::array<std::uint32_t, 4>& c, std::uint32_t k0,
                         std::uint32_t k1) {
  const std::uint64_t p0 = std::uint64_t(kPhiloxM0) * c[0];
  const std::uint64_t p1 = std::uint64_t(kPhiloxM1) * c[2];
  const std::uint32_t hi0 = std::uint32_t(p0 >> 32), lo0 = std::uint32_t(p0);
  const std::uint32_t hi1 = std::uint64_t(p1) >> 32, lo1 = std::uint32_t(p1);
  c = {hi1 ^ c[1] ^ k0, lo1, hi0 ^ c[3] ^ k1, lo0};
}

/// One Philox4x32-10 block: 128 output bits per (key, counter) pair.
inline std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> ctr,
                                               std::uint32_t k0,
                                               std::uint32_t k1) {
  for (int round = 0; round < 10; ++round) {
    philox_round(ctr, k0, k1);
    k0 += kPhiloxW0;
    k1 += kPhiloxW1;
  }
  return ctr;
}

}  // namespace detail

/// Quantile function of the standard normal distribution (Wichura's
/// PPND16 rational approximations, absolute error ~1e-16).  Used as the
/// inverse-CDF Gaussian transform so that Gaussian draws are a pure
/// function of the consumed uniform.
inline double inverse_normal_cdf(double p) {
  if (!(p > 0.0 && p < 1.0)) {
    if (p == 0.0) return -std::numeric_limits<double>::infinity();
    if (p == 1.0) return std::numeric_limits<double>::infinity();
    throw ConfigError("inverse_normal_cdf: p must lie in [0, 1]");
  }
  const double q = p - 0.5;
  if (std::abs(q) <= 0.425) {
    const double r = 0.180625 - q * q;
    return q *
           (((((((2.5090809287301226727e+3 * r + 3.3430575583588128105e+4) * r +
                 6.7265770927008700853e+4) *
                    r +
                4.5921953931549871457e+4) *
                   r +
               1.3731693765509461125e+4) *
                  r +
              1.9715909503065514427e+3) *
                 r +
             1.3314166789178437745e+2) *
                r +
            3.3871328727963666080e+0) /
           (((((((5.2264952788528545610e+3 * r + 2.8729085735721942674e+4) * r +
                 3.9307895800092710610e+4) *
                    r +
                2.1213794301586595867e+4) *
                   r +
               5.3941960214247511077e+3) *
                  r +
              6.8718700749205790830e+2) *
                 r +
             4.2313330701600911252e+1) *
                r +
            1.0);
  }
  double r = q < 0.0 ? p : 1.0 - p;
  r = std::sqrt(-std::log(r));
  double value;
  if (r <= 5.0) {
    r -= 1.6;
    value =
        (((((((7.74545014278341407640e-4 * r + 2.27238449892691845833e-2) * r +
              2.41780725177450611770e-1) *
                 r +
             1.27045825245236838258e+0) *
                r +
            3.64784832476320460504e+0) *
               r +
           5.76949722146069140550e+0) *
              r +
          4.63033784615654529590e+0) *
             r +
         1.42343711074968357734e+0) /
        (((((((1.05075007164441684324e-9 * r + 5.47593808499534494600e-4) * r +
              1.51986665636164571966e-2) *
                 r +
             1.48103976427480074590e-1) *
                r +
            6.89767334985100004550e-1) *
               r +
           1.67638483018380384940e+0) *
              r +
          2.05319162663775882187e+0) *
             r +
         1.0);
  } else {
    r -= 5.0;
    value =
        (((((((2.01033439929228813265e-7 * r + 2.71155556874348757815e-5) * r +
              1.24266094738807843860e-3) *
                 r +
             2.65321895265761230930e-2) *
                r +
            2.96560571828504891230e-1) *
               r +
           1.78482653991729133580e+0) *
              r +
          5.46378491116411436990e+0) *
             r +
         6.65790464350110377720e+0) /
        (((((((2.04426310338993978564e-15 * r + 1.42151175831644588870e-7) * r +
              1.84631831751005468180e-5) *
                 r +
             7.86869131145613259100e-4) *
                r +
            1.48753612908506148525e-2) *
               r +
           1.36929880922735805310e-1) *
              r +
          5.99832206555887937690e-1) *
             r +
         1.0);
  }
  return q < 0.0 ? -value : value;
}

/// Philox4x32-10 generator addressed by (seed, stream).  Draws consume a
/// monotonically increasing 64-bit block counter; the stream id occupies
/// the upper counter half so that distinct streams never overlap.
class CounterRng {
 public:
  explicit CounterRng(std::uint64_t seed, std::uint64_t stream = 0)
      : seed_(seed), stream_(stream) {}

  std::uint32_t next_u32() {
    if (pos_ == 4) {
      block_ = detail::philox4x32(
          {std::uint32_t(counter_), std::uint32_t(counter_ >> 32),
           std::uint32_t(stream_), std::uint32_t(stream_ >> 32)},
          std::uint32_t(seed_), std::uint32_t(seed_ >> 32));
      ++counter_;
      pos_ = 0;
    }
    return block_[pos_++];
  }

  std::uint64_t next_u64() {
    const std::uint64_t lo = next_u32();
    const std::uint64_t hi = next_u32();
    return (hi << 32) | lo;
  }

  /// Uniform draw in the open interval (0, 1): 53 significant bits,
  /// centred so that neither endpoint is attainable.
  double uniform01() {
    return (double(next_u64() >> 11) + 0.5) * 0x1.0p-53;
  }

  /// Standard normal draw via the inverse CDF of one uniform.
  double gaussian() { return inverse_normal_cdf(uniform01()); }

  /// Uniform on {-1, +1}.
  double sign() { return (next_u64() & 1u) ? 1.0 : -1.0; }

  /// Sparse three-point distribution: +sqrt(3) w.p. 1/6, 0 w.p. 2/3,
  /// -sqrt(3) w.p. 1/6 (unit variance, database-friendly sampling).
  double three_point() {
    const double u = uniform01();
    const double root3 = 1.7320508075688772;
    if (u < 1.0 / 6.0) return root3;
    if (u >= 5.0 / 6.0) return -root3;
    return 0.0;
  }

  /// Uniform integer in [0, n).  The 64-bit modulo bias is below 2^-53
  /// for every n used here (support shuffles, column picks).
  std::uint64_t below(std::uint64_t n) { return next_u64() % n; }

  std::uint64_t seed() const { return seed_; }
  std::uint64_t stream() const { return stream_; }

 private:
  std::uint64_t seed_;
  std::uint64_t stream_;
  std::uint64_t counter_ = 0;
  std::array<std::uint32_t, 4> block_{};
  int pos_ = 4;
};

/// Fixed stream ids.  Keeping each consumer on its own stream means that
/// e.g. sketch draws never alias instance-generation draws under a shared
/// seed.
namespace streams {
inline constexpr std::uint64_t sketch = 1;
inline constexpr std::uint64_t projection = 2;
inline constexpr std::uint64_t gen_left_factor = 3;
inline constexpr std::uint64_t gen_right_factor = 4;
inline constexpr std::uint64_t gen_code = 5;
inline constexpr std::uint64_t gen_noise = 6;
inline constexpr std::uint64_t gen_signal = 7;
inline constexpr std::uint64_t misc = 8;
}  // namespace streams

}  // namespace l0prox
