#pragma once

#include <optional>
#include <utility>
#include <vector>

#include "posefuse/pnp.hpp"
#include "posefuse/so3.hpp"

namespace posefuse {

struct FusionConfig {
  double gate = 0.9;  // keep estimates with confidence strictly above this
  int d_index = 2;    // proper-SVD diagonal entry feeding the scalar d
                      // (2 = smallest: conservative)
  bool empirical_sigma_eta = true;  // weighted eta outer products; false
                                    // selects the concentrated closed form
};

/// Fused camera pose with position and attitude dispersion. (mu_r, mu_t)
/// use the same base-to-camera convention as PartPoseEstimate, so the
/// camera position is C = -mu_r^T mu_t.
struct FusedPose {
  Vec3 mu_t = Vec3::Zero();
  Mat3 sigma_t = Mat3::Zero();   // weighted covariance of the t_i, m^2
  Rotation mu_r;                 // orthogonal mode U V^T of E[R]
  ProperSvd svd;                 // proper SVD of E[R]
  Mat3 sigma_eta = Mat3::Zero();  // attitude dispersion, rad^2
  bool sigma_eta_clamped = false;  // concentrated form had negative entries
  int n_inliers = 0;               // estimates past the gate
  std::vector<int> kept;           // their indices in the input list
  std::vector<double> weights;     // softmax weights, same order as kept
};

/// Indices of estimates with confidence strictly above gate and their
/// softmax weights exp(o_i) / sum_j exp(o_j). Both empty when nothing
/// passes (the frame becomes a gap).
std::pair<std::vector<int>, std::vector<double>> gate_and_weight(
    const std::vector<PartPoseEstimate>& estimates, double gate = 0.9);

/// mu = sum w_i t_i, sigma = sum w_i (t_i - mu)(t_i - mu)^T, accumulated
/// in input order.
std::pair<Vec3, Mat3> fuse_position(const std::vector<Vec3>& t_list,
                                    const std::vector<double>& weights);

/// First moment E[R] = sum w_j R_j (not itself a rotation); the proper
/// SVD U diag(d) V^T of it gives the attitude mode U V^T.
std::pair<Rotation, ProperSvd> fuse_attitude(
    const std::vector<Rotation>& r_list, const std::vector<double>& weights);

/// Concentrated-regime dispersion diag(1 + d1 - d2 - d3, 1 - d1 + d2 - d3,
/// 1 - d1 - d2 + d3). Valid only near d = (1,1,1); negative entries are
/// clamped to zero and reported through *clamped.
Mat3 sigma_eta_concentrated(const Vec3& d, bool* clamped = nullptr);

/// sum w_i eta_i eta_i^T with eta_i = log(u^T R_i v), the rotation vector
/// of R_i relative to the fused mode in the SVD frames.
Mat3 sigma_eta_empirical(const std::vector<Rotation>& r_list,
                         const std::vector<double>& weights, const Rotation& u,
                         const Rotation& v);

/// Gate, weight, and fuse a frame's estimates; nullopt when the gate
/// empties the set. sigma_eta follows cfg.empirical_sigma_eta; the
/// clamped flag always reflects the concentrated form's validity.
std::optional<FusedPose> fuse(const std::vector<PartPoseEstimate>& estimates,
                              const FusionConfig& cfg = {});

/// Equal-concentration rotation-error law: the error angle rho about a
/// uniform axis has density proportional to exp(2 s cos rho)(1 - cos rho)
/// on [0, pi].
struct AngleUq {
  double s = 0.0;  // concentration, >= 0
  double d = 0.0;  // mean-moment scalar in [0, 1)
};

/// d(s) = (1 + 2 E[cos rho]) / 3 by adaptive quadrature of the shifted
/// integrand exp(2s(cos rho - 1)) (overflow-free for any s).
double d_from_s(double s);

/// Inverse of d_from_s by bisection, tolerance 1e-10 in d. Throws
/// std::domain_error outside [0, 1).
double s_from_d(double d);

/// P[rho <= theta]: quadrature numerator against the Bessel-function
/// normalization pi (I0(2s) - I1(2s)), evaluated in scaled form.
double angle_cdf(double s, double theta);

/// Smallest theta with angle_cdf(s, theta) >= p, by bisection.
double angle_quantile(double s, double p);

}  // namespace posefuse
