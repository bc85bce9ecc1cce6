#include "posefuse/fusion.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "posefuse/special.hpp"

namespace posefuse {

std::pair<std::vector<int>, std::vector<double>> gate_and_weight(
    const std::vector<PartPoseEstimate>& estimates, double gate) {
  std::vector<int> kept;
  for (int i = 0; i < static_cast<int>(estimates.size()); ++i)
    if (estimates[i].confidence > gate) kept.push_back(i);
  std::vector<double> weights(kept.size());
  if (!kept.empty()) {
    double omax = estimates[kept[0]].confidence;
    for (int i : kept) omax = std::max(omax, estimates[i].confidence);
    double sum = 0.0;
    for (std::size_t k = 0; k < kept.size(); ++k) {
      weights[k] = std::exp(estimates[kept[k]].confidence - omax);
      sum += weights[k];
    }
    for (double& w : weights) w /= sum;
  }
  return {std::move(kept), std::move(weights)};
}

std::pair<Vec3, Mat3> fuse_position(const std::vector<Vec3>& t_list,
                                    const std::vector<double>& weights) {
  Vec3 mu = Vec3::Zero();
  for (std::size_t i = 0; i < t_list.size(); ++i) mu += weights[i] * t_list[i];
  Mat3 sigma = Mat3::Zero();
  for (std::size_t i = 0; i < t_list.size(); ++i) {
    const Vec3 d = t_list[i] - mu;
    sigma += weights[i] * (d * d.transpose());
  }
  return {mu, sigma};
}

std::pair<Rotation, ProperSvd> fuse_attitude(
    const std::vector<Rotation>& r_list, const std::vector<double>& weights) {
  Mat3 first_moment = Mat3::Zero();
  for (std::size_t i = 0; i < r_list.size(); ++i)
    first_moment += weights[i] * r_list[i].matrix();
  const ProperSvd svd = proper_svd(first_moment);
  return {svd.u * svd.v.inverse(), svd};
}

Mat3 sigma_eta_concentrated(const Vec3& d, bool* clamped) {
  Vec3 diag(1.0 + d(0) - d(1) - d(2), 1.0 - d(0) + d(1) - d(2),
            1.0 - d(0) - d(1) + d(2));
  bool neg = false;
  for (int i = 0; i < 3; ++i) {
    if (diag(i) < 0.0) {
      neg = true;
      diag(i) = 0.0;
    }
  }
  if (clamped) *clamped = neg;
  return diag.asDiagonal();
}

Mat3 sigma_eta_empirical(const std::vector<Rotation>& r_list,
                         const std::vector<double>& weights, const Rotation& u,
                         const Rotation& v) {
  Mat3 sigma = Mat3::Zero();
  for (std::size_t i = 0; i < r_list.size(); ++i) {
    const AxisAngleVec eta = log_so3(u.inverse() * r_list[i] * v);
    sigma += weights[i] * (eta * eta.transpose());
  }
  return sigma;
}

std::optional<FusedPose> fuse(const std::vector<PartPoseEstimate>& estimates,
                              const FusionConfig& cfg) {
  auto [kept, weights] = gate_and_weight(estimates, cfg.gate);
  if (kept.empty()) return std::nullopt;

  std::vector<Vec3> t_list;
  std::vector<Rotation> r_list;
  t_list.reserve(kept.size());
  r_list.reserve(kept.size());
  for (int i : kept) {
    t_list.push_back(estimates[i].translation);
    r_list.push_back(estimates[i].rotation);
  }

  FusedPose out;
  std::tie(out.mu_t, out.sigma_t) = fuse_position(t_list, weights);
  std::tie(out.mu_r, out.svd) = fuse_attitude(r_list, weights);
  const Mat3 concentrated =
      sigma_eta_concentrated(out.svd.d, &out.sigma_eta_clamped);
  out.sigma_eta = cfg.empirical_sigma_eta
                      ? sigma_eta_empirical(r_list, weights, out.svd.u,
                                            out.svd.v)
                      : concentrated;
  out.n_inliers = static_cast<int>(kept.size());
  out.kept = std::move(kept);
  out.weights = std::move(weights);
  return out;
}

namespace {

// exp(2s cos rho)(1 - cos rho) scaled by e^{-2s}: bounded by 2 for any s,
// so quadrature never overflows; the scale cancels against the scaled
// Bessel normalization (or in expectation ratios).
double scaled_angle_density(double s, double rho) {
  const double c = std::cos(rho);
  return std::exp(2.0 * s * (c - 1.0)) * (1.0 - c);
}

}  // namespace

double d_from_s(double s) {
  if (!(s >= 0.0)) throw std::domain_error("d_from_s: s must be >= 0");
  const double den = integrate_adaptive(
      [s](double r) { return scaled_angle_density(s, r); }, 0.0, M_PI, 1e-15,
      1e-12);
  const double num = integrate_adaptive(
      [s](double r) { return std::cos(r) * scaled_angle_density(s, r); }, 0.0,
      M_PI, 1e-15, 1e-12);
  return (1.0 + 2.0 * (num / den)) / 3.0;
}

double s_from_d(double d) {
  if (!(d >= 0.0 && d < 1.0))
    throw std::domain_error("s_from_d: d must lie in [0, 1)");
  if (d == 0.0) return 0.0;
  double lo = 0.0, hi = 1.0;
  while (d_from_s(hi) < d) {
    lo = hi;
    hi *= 2.0;
    if (hi > 1e12)
      throw std::domain_error("s_from_d: d too close to 1");
  }
  double mid = 0.5 * (lo + hi);
  for (int it = 0; it < 200; ++it) {
    mid = 0.5 * (lo + hi);
    const double dm = d_from_s(mid);
    if (std::fabs(dm - d) <= 1e-10) break;
    (dm < d ? lo : hi) = mid;
    if (hi - lo <= 1e-12 * std::max(1.0, hi)) break;
  }
  return mid;
}

double angle_cdf(double s, double theta) {
  if (!(s >= 0.0)) throw std::domain_error("angle_cdf: s must be >= 0");
  if (theta <= 0.0) return 0.0;
  theta = std::min(theta, M_PI);
  // pi (I0 - I1)(2s) e^{-2s}: same e^{-2s} scale as the integrand.
  const double den = M_PI * (bessel_i0e(2.0 * s) - bessel_i1e(2.0 * s));
  const double num = integrate_adaptive(
      [s](double r) { return scaled_angle_density(s, r); }, 0.0, theta, 1e-15,
      1e-12);
  return num / den;
}

double angle_quantile(double s, double p) {
  if (p <= 0.0) return 0.0;
  if (p >= 1.0) return M_PI;
  double lo = 0.0, hi = M_PI;
  for (int it = 0; it < 80; ++it) {
    const double mid = 0.5 * (lo + hi);
    (angle_cdf(s, mid) < p ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

}  // namespace posefuse
