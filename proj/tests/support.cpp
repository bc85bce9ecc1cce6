#include "support.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace posefuse::test {

MatchResult brute_force_match(const ProbMatrix& probs, const ClassLabels& labels) {
  std::array<int, kNumClasses> perm;
  std::iota(perm.begin(), perm.end(), 0);
  MatchResult best;
  best.cost = std::numeric_limits<double>::infinity();
  // next_permutation enumerates assignments in ascending lexicographic order,
  // so keeping strict improvements only yields the lexicographically smallest
  // minimizer. The cost accumulates over classes in ascending order, exactly
  // as matching_cost does, which makes tie detection bit-exact.
  do {
    double cost = 0.0;
    for (int c = 0; c < kNumClasses; ++c)
      if (labels[c]) cost -= probs(perm[c], c);
    if (cost < best.cost) {
      best.cost = cost;
      best.sigma = perm;
    }
  } while (std::next_permutation(perm.begin(), perm.end()));
  return best;
}

AngleLawSampler::AngleLawSampler(double s, int grid) {
  if (grid < 16) throw std::invalid_argument("AngleLawSampler: grid too small");
  theta_.resize(grid + 1);
  cdf_.resize(grid + 1);
  const double pi = 3.14159265358979323846;
  const double h = pi / grid;
  // Trapezoid accumulation of the unnormalized density. The exp(-2s)
  // prefactor of exp(2 s cos t) is dropped; it cancels in the normalization.
  std::vector<double> f(grid + 1);
  for (int i = 0; i <= grid; ++i) {
    theta_[i] = i * h;
    f[i] = std::exp(2.0 * s * (std::cos(theta_[i]) - 1.0)) * (1.0 - std::cos(theta_[i]));
  }
  cdf_[0] = 0.0;
  for (int i = 1; i <= grid; ++i) cdf_[i] = cdf_[i - 1] + 0.5 * h * (f[i - 1] + f[i]);
  const double total = cdf_[grid];
  for (int i = 0; i <= grid; ++i) cdf_[i] /= total;
}

double AngleLawSampler::sample(Rng& rng) const {
  const double u = rng.uniform_open();
  const auto it = std::lower_bound(cdf_.begin(), cdf_.end(), u);
  std::size_t hi = static_cast<std::size_t>(it - cdf_.begin());
  if (hi == 0) hi = 1;
  if (hi >= cdf_.size()) hi = cdf_.size() - 1;
  const double c0 = cdf_[hi - 1], c1 = cdf_[hi];
  const double w = c1 > c0 ? (u - c0) / (c1 - c0) : 0.5;
  return theta_[hi - 1] + w * (theta_[hi] - theta_[hi - 1]);
}

double AngleLawSampler::cdf(double theta) const {
  if (theta <= 0.0) return 0.0;
  if (theta >= theta_.back()) return 1.0;
  const auto it = std::upper_bound(theta_.begin(), theta_.end(), theta);
  const std::size_t hi = static_cast<std::size_t>(it - theta_.begin());
  const double t0 = theta_[hi - 1], t1 = theta_[hi];
  const double w = (theta - t0) / (t1 - t0);
  return cdf_[hi - 1] + w * (cdf_[hi] - cdf_[hi - 1]);
}

Rotation random_rotation(Rng& rng) {
  while (true) {
    const double w = rng.normal(), x = rng.normal(), y = rng.normal(), z = rng.normal();
    const double n = std::sqrt(w * w + x * x + y * y + z * z);
    if (n < 1e-12) continue;
    const double qw = w / n, qx = x / n, qy = y / n, qz = z / n;
    Mat3 m;
    m << 1 - 2 * (qy * qy + qz * qz), 2 * (qx * qy - qw * qz), 2 * (qx * qz + qw * qy),
        2 * (qx * qy + qw * qz), 1 - 2 * (qx * qx + qz * qz), 2 * (qy * qz - qw * qx),
        2 * (qx * qz - qw * qy), 2 * (qy * qz + qw * qx), 1 - 2 * (qx * qx + qy * qy);
    return Rotation::from_matrix(m);
  }
}

double median(std::vector<double> v) {
  if (v.empty()) throw std::invalid_argument("median of empty vector");
  const std::size_t mid = v.size() / 2;
  std::nth_element(v.begin(), v.begin() + mid, v.end());
  double hi = v[mid];
  if (v.size() % 2 == 1) return hi;
  std::nth_element(v.begin(), v.begin() + mid - 1, v.begin() + mid);
  return 0.5 * (v[mid - 1] + hi);
}

}  // namespace posefuse::test
