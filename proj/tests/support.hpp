#pragma once

#include <vector>

#include "posefuse/assignment.hpp"
#include "posefuse/rng.hpp"
#include "posefuse/so3.hpp"

namespace posefuse::test {

/// Exhaustive 7!-enumeration oracle for the assignment problem. Evaluates the
/// cost of every permutation with the same accumulation order as
/// matching_cost and keeps the lexicographically smallest minimizer, so both
/// the cost and the assignment must match hungarian_match bit for bit.
MatchResult brute_force_match(const ProbMatrix& probs, const ClassLabels& labels);

/// Independent sampler for the rotation-angle law with density proportional
/// to exp(2 s cos(theta)) * (1 - cos(theta)) on [0, pi]. Built from a dense
/// trapezoid table of the density and inverted by binary search, so it shares
/// no code with the Bessel-based CDF in the library.
class AngleLawSampler {
 public:
  explicit AngleLawSampler(double s, int grid = 1 << 15);

  /// Draws one angle via inverse-CDF lookup.
  double sample(Rng& rng) const;

  /// Table CDF (linear interpolation), for cross-checking the table itself.
  double cdf(double theta) const;

 private:
  std::vector<double> theta_;
  std::vector<double> cdf_;
};

/// Uniform random rotation via a normalized Gaussian quaternion.
Rotation random_rotation(Rng& rng);

/// Median of a copy of v (v may be reordered internally).
double median(std::vector<double> v);

}  // namespace posefuse::test
