#include <algorithm>
#include <numeric>
#include <random>
#include <utility>
#include <vector>

#include "grandag/error.hpp"
#include "grandag/post.hpp"

namespace grandag {

namespace {

constexpr double kConstantFeature = 1e-7;
constexpr double kPureNode = 1e-14;

struct Split {
  int feature = -1;
  double threshold = 0.0;
  double proxy = 0.0;  // sum_L^2 / n_L + sum_R^2 / n_R, larger is better
};

// Grows one fully developed extremely randomized tree and adds each split's
// weighted variance decrease to `gain`.
void grow_tree(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, int min_split, Rng& rng,
               std::vector<int>& idx, Eigen::VectorXd& gain) {
  const int p = static_cast<int>(x.cols());
  std::iota(idx.begin(), idx.end(), 0);
  std::vector<int> features(p);
  std::iota(features.begin(), features.end(), 0);
  std::vector<std::pair<int, int>> todo{{0, static_cast<int>(idx.size())}};
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  while (!todo.empty()) {
    const auto [begin, end] = todo.back();
    todo.pop_back();
    const int count = end - begin;
    if (count < min_split) continue;
    double sum = 0.0, sumsq = 0.0;
    for (int k = begin; k < end; ++k) {
      const double v = y(idx[k]);
      sum += v;
      sumsq += v * v;
    }
    const double node_sse = sumsq - sum * sum / count;
    if (node_sse <= kPureNode * count) continue;

    std::shuffle(features.begin(), features.end(), rng);
    Split best;
    for (int f : features) {
      double lo = x(idx[begin], f), hi = lo;
      for (int k = begin + 1; k < end; ++k) {
        const double v = x(idx[k], f);
        lo = std::min(lo, v);
        hi = std::max(hi, v);
      }
      if (hi <= lo + kConstantFeature) continue;
      double thr = lo + (hi - lo) * unit(rng);
      if (thr >= hi) thr = lo;
      double left_sum = 0.0;
      int left_n = 0;
      for (int k = begin; k < end; ++k) {
        if (x(idx[k], f) <= thr) {
          left_sum += y(idx[k]);
          ++left_n;
        }
      }
      const int right_n = count - left_n;
      if (left_n == 0 || right_n == 0) continue;
      const double right_sum = sum - left_sum;
      const double proxy = left_sum * left_sum / left_n + right_sum * right_sum / right_n;
      if (best.feature < 0 || proxy > best.proxy) best = {f, thr, proxy};
    }
    if (best.feature < 0) continue;

    const auto mid_it = std::partition(idx.begin() + begin, idx.begin() + end,
                                       [&](int r) { return x(r, best.feature) <= best.threshold; });
    const int mid = static_cast<int>(mid_it - idx.begin());
    // SSE_parent - SSE_left - SSE_right reduces to proxy - sum^2 / n.
    gain(best.feature) += std::max(0.0, best.proxy - sum * sum / count);
    todo.emplace_back(begin, mid);
    todo.emplace_back(mid, end);
  }
}

}  // namespace

Eigen::VectorXd extra_trees_importance(const Eigen::MatrixXd& features, const Eigen::VectorXd& target,
                                       const ExtraTreesOptions& opts, Rng& rng) {
  if (features.rows() != target.size()) throw InvalidInput("extra trees: feature and target row counts differ");
  if (opts.n_trees < 1) throw InvalidInput("extra trees: need at least one tree");
  const Eigen::Index p = features.cols();
  Eigen::VectorXd total = Eigen::VectorXd::Zero(p);
  if (p == 0 || features.rows() == 0) return total;
  std::vector<int> idx(features.rows());
  Eigen::VectorXd gain(p);
  for (int t = 0; t < opts.n_trees; ++t) {
    gain.setZero();
    grow_tree(features, target, std::max(2, opts.min_samples_split), rng, idx, gain);
    const double s = gain.sum();
    if (s > 0.0) total += gain / s;
  }
  const double s = total.sum();
  if (s > 0.0) total /= s;
  return total;
}

std::vector<bool> select_above_mean(const Eigen::VectorXd& importance, double factor) {
  if (!(factor > 0.0)) throw InvalidInput("PNS threshold factor must be positive");
  std::vector<bool> keep(importance.size(), false);
  if (importance.size() == 0) return keep;
  const double cutoff = factor * importance.mean();
  for (Eigen::Index i = 0; i < importance.size(); ++i) keep[i] = importance(i) > cutoff;
  return keep;
}

}  // namespace grandag
