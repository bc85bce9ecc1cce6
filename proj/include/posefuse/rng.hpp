#pragma once

#include <cstdint>

namespace posefuse {

/// Seedable, splittable pseudo-random generator (xoshiro256++ state,
/// splitmix64 seeding). All stochastic operations in this library take an
/// explicit Rng handle so that runs are reproducible bit-for-bit from a
/// single root seed. Distribution transforms are implemented here rather
/// than with std::<distribution> types, whose output is
/// implementation-defined.
class Rng {
 public:
  explicit Rng(std::uint64_t seed);

  std::uint64_t next_u64();

  /// Derive an independent child stream keyed off this generator's seed.
  /// split() depends only on (seed, key), not on how many draws have been
  /// consumed, so per-frame streams are stable under reordering.
  Rng split(std::uint64_t key) const;

  /// Uniform double in [0, 1), 53-bit resolution.
  double uniform();
  /// Uniform double in (0, 1), safe as input to inverse CDFs.
  double uniform_open();
  double uniform(double lo, double hi);
  /// Uniform integer in [0, n), n > 0.
  std::uint64_t uniform_int(std::uint64_t n);
  /// Standard normal via inverse CDF (one uniform per variate).
  double normal();
  /// Gamma(shape, 1), shape > 0. Marsaglia-Tsang squeeze.
  double gamma(double shape);
  /// Beta(alpha, beta) via two gamma draws.
  double beta(double alpha, double beta);

  std::uint64_t seed() const { return seed_; }

 private:
  std::uint64_t s_[4];
  std::uint64_t seed_;
};

/// Standard normal CDF.
double normal_cdf(double x);
/// Standard normal quantile, Wichura's AS241 (double precision).
double normal_quantile(double p);

/// One draw from a normal(mean, stddev) truncated to [lo, hi], by inverse
/// CDF. Deterministic: consumes exactly one uniform. Intervals so deep in
/// a tail that the CDF saturates in double precision degrade gracefully
/// (draws clamp into [lo, hi]) rather than failing.
double sample_truncated_normal(double mean, double stddev, double lo,
                               double hi, Rng& rng);
/// CDF of the truncated normal above, for tests and goodness-of-fit checks.
double truncated_normal_cdf(double x, double mean, double stddev, double lo,
                            double hi);

}  // namespace posefuse
