#include "posefuse/pnp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <vector>

namespace posefuse {

namespace {

constexpr double kPlanarExtent = 1e-6;  // meters
constexpr double kInf = std::numeric_limits<double>::infinity();

// The solver works in a +z-forward frame (depths positive, +y down) where
// the pixel equations read u = fx x/z + cx, v = fy y/z + cy -- identical
// pixel values to the render frame of camera.hpp, related by kFlip.
const Mat3 kFlip = Vec3(1.0, -1.0, -1.0).asDiagonal();

struct CvPose {
  Mat3 r;
  Vec3 t;
};

// Rigid alignment cam ~ r * world + t (Kabsch).
CvPose kabsch(const Eigen::MatrixX3d& world, const Eigen::MatrixX3d& cam) {
  const Vec3 wbar = world.colwise().mean();
  const Vec3 cbar = cam.colwise().mean();
  const Mat3 h = (world.rowwise() - wbar.transpose()).transpose() *
                 (cam.rowwise() - cbar.transpose());
  Eigen::JacobiSVD<Mat3> svd(h, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Mat3 u = svd.matrixU();
  Mat3 v = svd.matrixV();
  if ((v * u.transpose()).determinant() < 0.0) v.col(2) = -v.col(2);
  const Mat3 r = v * u.transpose();
  return {r, cbar - r * wbar};
}

double reproj_error_cv(const CvPose& pose, const Eigen::MatrixX3d& world,
                       const Eigen::MatrixX2d& px,
                       const CameraIntrinsics& intr) {
  double sum = 0.0;
  for (int i = 0; i < world.rows(); ++i) {
    const Vec3 p = pose.r * world.row(i).transpose() + pose.t;
    if (p.z() <= 1e-9) return kInf;  // behind the camera: not a solution
    const double u = intr.fx * p.x() / p.z() + intr.cx;
    const double v = intr.fy * p.y() / p.z() + intr.cy;
    sum += std::hypot(u - px(i, 0), v - px(i, 1));
  }
  return sum / static_cast<double>(world.rows());
}

// Products beta_k beta_l laid out column-major in (l, k <= l) order, the
// order used by the distance system L.
Eigen::VectorXd beta_products(const Eigen::VectorXd& beta) {
  const int nv = static_cast<int>(beta.size());
  Eigen::VectorXd b(nv * (nv + 1) / 2);
  int col = 0;
  for (int l = 0; l < nv; ++l)
    for (int k = 0; k <= l; ++k) b(col++) = beta(k) * beta(l);
  return b;
}

// Gauss-Newton on the control-point distance constraints
// L beta_products(beta) = rho.
void refine_betas(const Eigen::MatrixXd& l, const Eigen::VectorXd& rho,
                  Eigen::VectorXd& beta) {
  const int np = static_cast<int>(l.rows());
  const int nv = static_cast<int>(beta.size());
  Eigen::MatrixXd jac(np, nv);
  for (int iter = 0; iter < 10; ++iter) {
    jac.setZero();
    for (int r = 0; r < np; ++r) {
      int col = 0;
      for (int lidx = 0; lidx < nv; ++lidx) {
        for (int k = 0; k <= lidx; ++k) {
          const double lrc = l(r, col++);
          if (k == lidx) {
            jac(r, k) += 2.0 * lrc * beta(k);
          } else {
            jac(r, k) += lrc * beta(lidx);
            jac(r, lidx) += lrc * beta(k);
          }
        }
      }
    }
    const Eigen::VectorXd residual = rho - l * beta_products(beta);
    const Eigen::VectorXd step = jac.colPivHouseholderQr().solve(residual);
    beta += step;
    if (step.norm() < 1e-12) break;
  }
}

}  // namespace

std::pair<Rotation, Vec3> epnp(const Eigen::MatrixX3d& pts3d,
                               const Eigen::MatrixX2d& pts2d,
                               const CameraIntrinsics& intr) {
  const int n = static_cast<int>(pts3d.rows());
  if (n < 4 || pts2d.rows() != n)
    throw std::invalid_argument("epnp: needs >= 4 correspondences");

  const Vec3 centroid = pts3d.colwise().mean();
  const Eigen::MatrixX3d centered = pts3d.rowwise() - centroid.transpose();
  const Mat3 cov = centered.transpose() * centered / n;
  Eigen::SelfAdjointEigenSolver<Mat3> pca(cov);  // ascending eigenvalues
  const Vec3 extent = pca.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  if (extent(1) < kPlanarExtent)
    throw std::invalid_argument("epnp: collinear points");
  const bool planar = extent(0) < kPlanarExtent;
  const int ncp = planar ? 3 : 4;  // control points
  const int nv = planar ? 2 : 4;   // null-space candidates

  // Control points: centroid plus principal axes, strongest first.
  Eigen::MatrixX3d ctrl(ncp, 3);
  ctrl.row(0) = centroid.transpose();
  for (int k = 1; k < ncp; ++k)
    ctrl.row(k) =
        (centroid + extent(3 - k) * pca.eigenvectors().col(3 - k)).transpose();

  // Barycentric coordinates: p = sum_j alpha_ij ctrl_j, sum_j alpha_ij = 1.
  Eigen::MatrixXd alpha(n, ncp);
  {
    Eigen::MatrixXd basis(3, ncp - 1);
    for (int k = 1; k < ncp; ++k)
      basis.col(k - 1) = (ctrl.row(k) - ctrl.row(0)).transpose();
    const Eigen::MatrixXd sol = (basis.transpose() * basis)
                                    .ldlt()
                                    .solve(basis.transpose() *
                                           centered.transpose());
    for (int i = 0; i < n; ++i) {
      double s = 0.0;
      for (int k = 1; k < ncp; ++k) {
        alpha(i, k) = sol(k - 1, i);
        s += alpha(i, k);
      }
      alpha(i, 0) = 1.0 - s;
    }
  }

  // 2n x 3*ncp system: fx x_j + (cx - u) z_j = 0 rows per point, expanded
  // over the barycentric combination of control-point coordinates.
  Eigen::MatrixXd m(2 * n, 3 * ncp);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < ncp; ++j) {
      const double a = alpha(i, j);
      m(2 * i, 3 * j) = a * intr.fx;
      m(2 * i, 3 * j + 1) = 0.0;
      m(2 * i, 3 * j + 2) = a * (intr.cx - pts2d(i, 0));
      m(2 * i + 1, 3 * j) = 0.0;
      m(2 * i + 1, 3 * j + 1) = a * intr.fy;
      m(2 * i + 1, 3 * j + 2) = a * (intr.cy - pts2d(i, 1));
    }
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> null_es(m.transpose() * m);
  std::vector<Eigen::VectorXd> v(nv);
  for (int k = 0; k < nv; ++k) v[k] = null_es.eigenvectors().col(k);

  // Pairwise distance constraints between control points.
  std::vector<std::pair<int, int>> pairs;
  for (int a = 0; a < ncp; ++a)
    for (int b = a + 1; b < ncp; ++b) pairs.emplace_back(a, b);
  const int np = static_cast<int>(pairs.size());
  Eigen::VectorXd rho(np);
  Eigen::MatrixXd l(np, nv * (nv + 1) / 2);
  for (int r = 0; r < np; ++r) {
    const auto [a, b] = pairs[r];
    rho(r) = (ctrl.row(a) - ctrl.row(b)).squaredNorm();
    std::vector<Vec3> dv(nv);
    for (int k = 0; k < nv; ++k)
      dv[k] = v[k].segment<3>(3 * a) - v[k].segment<3>(3 * b);
    int col = 0;
    for (int lidx = 0; lidx < nv; ++lidx)
      for (int k = 0; k <= lidx; ++k)
        l(r, col++) = (k == lidx) ? dv[k].dot(dv[k]) : 2.0 * dv[k].dot(dv[lidx]);
  }

  // Initial betas for each candidate null-space dimension, in the product
  // coordinates: N=1 uses b11 alone; N=2 solves [b11 b12 b22]; N=3 solves
  // [b11 b12 b22 b13 b23]; the 4-vector case solves [b11 b12 b13 b14].
  std::vector<Eigen::VectorXd> candidates;
  {
    Eigen::VectorXd beta = Eigen::VectorXd::Zero(nv);
    const double b11 = l.col(0).dot(rho) / l.col(0).squaredNorm();
    beta(0) = std::sqrt(std::fabs(b11));
    candidates.push_back(beta);
  }
  {
    Eigen::VectorXd beta = Eigen::VectorXd::Zero(nv);
    const Eigen::Vector3d b =
        l.leftCols(3).colPivHouseholderQr().solve(rho);
    if (b(0) < 0) {
      beta(0) = std::sqrt(-b(0));
      beta(1) = (b(2) < 0) ? std::sqrt(-b(2)) : 0.0;
    } else {
      beta(0) = std::sqrt(b(0));
      beta(1) = (b(2) > 0) ? std::sqrt(b(2)) : 0.0;
    }
    if (b(1) < 0) beta(0) = -beta(0);
    candidates.push_back(beta);
  }
  if (nv >= 3) {
    Eigen::VectorXd beta = Eigen::VectorXd::Zero(nv);
    const Eigen::VectorXd b = l.leftCols(5).colPivHouseholderQr().solve(rho);
    if (b(0) < 0) {
      beta(0) = std::sqrt(-b(0));
      beta(1) = (b(2) < 0) ? std::sqrt(-b(2)) : 0.0;
    } else {
      beta(0) = std::sqrt(b(0));
      beta(1) = (b(2) > 0) ? std::sqrt(b(2)) : 0.0;
    }
    if (b(1) < 0) beta(0) = -beta(0);
    beta(2) = (beta(0) != 0.0) ? b(3) / beta(0) : 0.0;
    candidates.push_back(beta);
  }
  if (nv >= 4) {
    Eigen::VectorXd beta = Eigen::VectorXd::Zero(nv);
    Eigen::MatrixXd l4(np, 4);
    l4.col(0) = l.col(0);
    l4.col(1) = l.col(1);
    l4.col(2) = l.col(3);
    l4.col(3) = l.col(6);
    const Eigen::VectorXd b = l4.colPivHouseholderQr().solve(rho);
    if (b(0) < 0) {
      beta(0) = std::sqrt(-b(0));
      for (int k = 1; k < 4; ++k) beta(k) = -b(k) / beta(0);
    } else {
      beta(0) = std::sqrt(b(0));
      for (int k = 1; k < 4; ++k) beta(k) = b(k) / beta(0);
    }
    candidates.push_back(beta);
  }

  CvPose best{};
  double best_err = kInf;
  Eigen::MatrixX3d ctrl_cam(ncp, 3);
  for (Eigen::VectorXd& beta : candidates) {
    refine_betas(l, rho, beta);
    for (int j = 0; j < ncp; ++j) {
      Vec3 cc = Vec3::Zero();
      for (int k = 0; k < nv; ++k) cc += beta(k) * v[k].segment<3>(3 * j);
      ctrl_cam.row(j) = cc.transpose();
    }
    Eigen::MatrixX3d pc = alpha * ctrl_cam;
    if (pc.col(2).sum() < 0.0) pc = -pc;  // depths must be positive
    const CvPose pose = kabsch(pts3d, pc);
    const double err = reproj_error_cv(pose, pts3d, pts2d, intr);
    if (err < best_err) {
      best_err = err;
      best = pose;
    }
  }
  if (!std::isfinite(best_err))
    throw std::runtime_error("epnp: no candidate places the points in front");

  return {Rotation::from_matrix(kFlip * best.r), kFlip * best.t};
}

std::optional<PartPoseEstimate> estimate_pose(
    const Keypoints3& pts3d, const Keypoints2& pts2d,
    const std::array<bool, kNumKeypoints>& valid, const CameraIntrinsics& intr,
    const RansacConfig& cfg, Rng& rng) {
  std::vector<int> idx;
  for (int k = 0; k < kNumKeypoints; ++k)
    if (valid[k]) idx.push_back(k);
  const int n = static_cast<int>(idx.size());
  if (n < std::max({cfg.min_inliers, cfg.sample_size, 4})) return std::nullopt;

  Eigen::MatrixX3d w(n, 3);
  Eigen::MatrixX2d px(n, 2);
  for (int i = 0; i < n; ++i) {
    w.row(i) = pts3d.row(idx[i]);
    px.row(i) = pts2d.row(idx[i]);
  }

  const auto count_inliers = [&](const Rotation& r, const Vec3& t,
                                 std::vector<char>* mask) {
    int cnt = 0;
    const Mat3 rm = r.matrix();
    for (int i = 0; i < n; ++i) {
      Eigen::Vector2d uv;
      const bool in =
          project_extrinsic(intr, rm, t, w.row(i).transpose(), &uv) &&
          (uv - px.row(i).transpose()).norm() < cfg.inlier_threshold;
      if (mask) (*mask)[i] = in;
      cnt += in;
    }
    return cnt;
  };

  // Refit on the masked subset; empty on degenerate geometry.
  const auto fit_mask = [&](const std::vector<char>& mask, int cnt)
      -> std::optional<std::pair<Rotation, Vec3>> {
    Eigen::MatrixX3d iw(cnt, 3);
    Eigen::MatrixX2d ip(cnt, 2);
    int c = 0;
    for (int i = 0; i < n; ++i) {
      if (!mask[i]) continue;
      iw.row(c) = w.row(i);
      ip.row(c) = px.row(i);
      ++c;
    }
    try {
      return epnp(iw, ip, intr);
    } catch (const std::exception&) {
      return std::nullopt;
    }
  };

  std::vector<int> positions(n);
  std::iota(positions.begin(), positions.end(), 0);
  Eigen::MatrixX3d sw(cfg.sample_size, 3);
  Eigen::MatrixX2d sp(cfg.sample_size, 2);
  int best_count = 0;
  Rotation best_r;
  Vec3 best_t = Vec3::Zero();
  int needed = cfg.max_iterations;
  for (int it = 0; it < needed; ++it) {
    for (int s = 0; s < cfg.sample_size; ++s) {  // partial Fisher-Yates
      const int j =
          s + static_cast<int>(rng.uniform_int(static_cast<std::uint64_t>(n - s)));
      std::swap(positions[s], positions[j]);
    }
    for (int s = 0; s < cfg.sample_size; ++s) {
      sw.row(s) = w.row(positions[s]);
      sp.row(s) = px.row(positions[s]);
    }
    Rotation r;
    Vec3 t;
    try {
      std::tie(r, t) = epnp(sw, sp, intr);
    } catch (const std::exception&) {
      continue;  // degenerate sample
    }
    int cnt = count_inliers(r, t, nullptr);
    if (cnt > best_count) {
      // Local optimization: a pose from a minimal sample is wobbly, so its
      // consensus undercounts; refitting on that consensus and recounting
      // usually recovers the full inlier set.
      if (cnt >= 4) {
        std::vector<char> m(n);
        count_inliers(r, t, &m);
        if (const auto refit = fit_mask(m, cnt)) {
          const int cnt2 = count_inliers(refit->first, refit->second, nullptr);
          if (cnt2 > cnt) {
            cnt = cnt2;
            r = refit->first;
            t = refit->second;
          }
        }
      }
      best_count = cnt;
      best_r = r;
      best_t = t;
      // Enough iterations for 99% confidence of one clean sample at the
      // observed inlier ratio. Clamp before narrowing: the estimate can
      // exceed the int range at low ratios.
      const double p_clean =
          std::pow(static_cast<double>(cnt) / n, cfg.sample_size);
      const double denom = std::log(std::max(1.0 - p_clean, 1e-12));
      const double est = std::ceil(std::log(0.01) / denom);
      needed = static_cast<int>(std::clamp(
          est, static_cast<double>(it + 1),
          static_cast<double>(cfg.max_iterations)));
    }
  }
  if (best_count < cfg.min_inliers) return std::nullopt;

  std::vector<char> mask(n);
  count_inliers(best_r, best_t, &mask);
  Rotation fin_r = best_r;
  Vec3 fin_t = best_t;
  if (const auto refit = fit_mask(mask, best_count)) {
    std::vector<char> mask2(n);
    const int cnt2 = count_inliers(refit->first, refit->second, &mask2);
    if (cnt2 >= cfg.min_inliers) {  // keep the refit only if it held up
      fin_r = refit->first;
      fin_t = refit->second;
      mask = mask2;
      best_count = cnt2;
    }
  }

  PartPoseEstimate est;
  est.rotation = fin_r;
  est.translation = fin_t;
  double err_sum = 0.0;
  const Mat3 rm = fin_r.matrix();
  for (int i = 0; i < n; ++i) {
    if (!mask[i]) continue;
    est.inliers[idx[i]] = true;
    Eigen::Vector2d uv;
    project_extrinsic(intr, rm, fin_t, w.row(i).transpose(), &uv);
    err_sum += (uv - px.row(i).transpose()).norm();
  }
  est.reproj_error = err_sum / best_count;
  return est;
}

}  // namespace posefuse
