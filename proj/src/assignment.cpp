#include "posefuse/assignment.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

namespace posefuse {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

using CostMatrix = Eigen::Matrix<double, kNumClasses, kNumClasses>;

// Kuhn-Munkres with potentials and shortest augmenting paths on the
// sub-problem spanned by the listed classes and queries (equal length).
// Returns assign[k] = index into `queries` matched to classes[k].
std::vector<int> km(const CostMatrix& cost, const std::vector<int>& classes,
                    const std::vector<int>& queries) {
  const int m = static_cast<int>(classes.size());
  std::vector<double> u(m + 1, 0.0), v(m + 1, 0.0), minv(m + 1);
  std::vector<int> p(m + 1, 0), way(m + 1, 0);
  std::vector<char> used(m + 1, 0);
  for (int i = 1; i <= m; ++i) {
    p[0] = i;
    int j0 = 0;
    std::fill(minv.begin(), minv.end(), kInf);
    std::fill(used.begin(), used.end(), 0);
    do {
      used[j0] = 1;
      const int i0 = p[j0];
      int j1 = 0;
      double delta = kInf;
      for (int j = 1; j <= m; ++j) {
        if (used[j]) continue;
        const double cur = cost(queries[j - 1], classes[i0 - 1]) - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (int j = 0; j <= m; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      const int j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0);
  }
  std::vector<int> assign(m, -1);
  for (int j = 1; j <= m; ++j)
    if (p[j] > 0) assign[p[j] - 1] = j - 1;
  return assign;
}

}  // namespace

double matching_cost(const std::array<int, kNumClasses>& sigma,
                     const ProbMatrix& probs, const ClassLabels& c_g) {
  double cost = 0.0;
  for (int c = 0; c < kNumClasses; ++c)
    if (c_g[c]) cost -= probs(sigma[c], c);
  return cost;
}

MatchResult hungarian_match(const ProbMatrix& probs, const ClassLabels& c_g) {
  CostMatrix cost;
  for (int q = 0; q < kNumClasses; ++q)
    for (int c = 0; c < kNumClasses; ++c)
      cost(q, c) = c_g[c] ? -probs(q, c) : 0.0;

  // Fix sigma[c] left to right: try candidate rows in ascending order and
  // keep the first whose optimal completion (KM on the rest) reaches the
  // smallest total. Totals always accumulate in ascending class order, so
  // candidate comparisons are exact and the tie-break is deterministic.
  MatchResult out;
  std::array<bool, kNumClasses> used{};
  double prefix = 0.0;
  for (int c = 0; c < kNumClasses; ++c) {
    std::vector<int> rest_classes;
    for (int cc = c + 1; cc < kNumClasses; ++cc) rest_classes.push_back(cc);
    int best_q = -1;
    double best_total = kInf;
    for (int q = 0; q < kNumClasses; ++q) {
      if (used[q]) continue;
      double total = prefix + cost(q, c);
      if (!rest_classes.empty()) {
        std::vector<int> rest_queries;
        for (int qq = 0; qq < kNumClasses; ++qq)
          if (!used[qq] && qq != q) rest_queries.push_back(qq);
        const std::vector<int> assign = km(cost, rest_classes, rest_queries);
        for (std::size_t k = 0; k < rest_classes.size(); ++k)
          total += cost(rest_queries[assign[k]], rest_classes[k]);
      }
      if (total < best_total) {
        best_total = total;
        best_q = q;
      }
    }
    out.sigma[c] = best_q;
    used[best_q] = true;
    prefix += cost(best_q, c);
  }
  out.cost = matching_cost(out.sigma, probs, c_g);
  return out;
}

double keypoint_loss(const MatchResult& match, const ProbMatrix& probs,
                     const std::array<Keypoints2, kNumClasses>& pred_kp,
                     const GroundTruthFrame& gt, double gamma) {
  double loss = 0.0;
  for (int c = 0; c < kNumClasses; ++c) {
    const int q = match.sigma[c];
    const int target = gt.c_g[c] ? c : kNoObjectIndex;
    loss -= std::log(std::max(probs(q, target), 1e-12));
    if (gt.c_g[c])
      loss += gamma * (gt.keypoints[c] - pred_kp[q]).cwiseAbs().sum();
  }
  return loss;
}

}  // namespace posefuse
