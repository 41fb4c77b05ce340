#include "itemgauge/tree.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace itemgauge::screen {

namespace {

struct SplitChoice {
  int feature = -1;
  double threshold = 0.0;
  double score = std::numeric_limits<double>::infinity();  // lower is better
  int left_count = 0;
};

// Weighted children impurity for every threshold of one feature; keeps the
// first (lowest) threshold on ties.
void scan_feature(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                  const std::vector<int>& samples, int begin, int end, int feature,
                  bool classification, SplitChoice& best) {
  const int n = end - begin;
  thread_local std::vector<std::pair<double, double>> order;  // (x, y)
  order.clear();
  order.reserve(static_cast<std::size_t>(n));
  for (int i = begin; i < end; ++i) {
    order.emplace_back(X(samples[static_cast<std::size_t>(i)], feature),
                       y(samples[static_cast<std::size_t>(i)]));
  }
  std::sort(order.begin(), order.end());
  if (order.front().first == order.back().first) return;

  double total_sum = 0.0, total_sq = 0.0;
  for (const auto& [xv, yv] : order) {
    total_sum += yv;
    total_sq += yv * yv;
  }

  double left_sum = 0.0, left_sq = 0.0;
  for (int i = 0; i + 1 < n; ++i) {
    const double yv = order[static_cast<std::size_t>(i)].second;
    left_sum += yv;
    left_sq += yv * yv;
    const double xv = order[static_cast<std::size_t>(i)].first;
    const double x_next = order[static_cast<std::size_t>(i) + 1].first;
    if (xv == x_next) continue;
    const double nl = static_cast<double>(i + 1);
    const double nr = static_cast<double>(n - i - 1);
    double score;
    if (classification) {
      // Gini: y is 0/1, sum == positive count.
      const double pl = left_sum / nl;
      const double pr = (total_sum - left_sum) / nr;
      score = nl * 2.0 * pl * (1.0 - pl) + nr * 2.0 * pr * (1.0 - pr);
    } else {
      const double right_sum = total_sum - left_sum;
      const double right_sq = total_sq - left_sq;
      const double sse_l = left_sq - left_sum * left_sum / nl;
      const double sse_r = right_sq - right_sum * right_sum / nr;
      score = sse_l + sse_r;
    }
    if (score < best.score) {
      best.score = score;
      best.feature = feature;
      best.threshold = 0.5 * (xv + x_next);
      best.left_count = i + 1;
    }
  }
}

double node_impurity(const Eigen::VectorXd& y, const std::vector<int>& samples, int begin,
                     int end, bool classification) {
  const double n = static_cast<double>(end - begin);
  double sum = 0.0, sq = 0.0;
  for (int i = begin; i < end; ++i) {
    const double v = y(samples[static_cast<std::size_t>(i)]);
    sum += v;
    sq += v * v;
  }
  if (classification) {
    const double p = sum / n;
    return n * 2.0 * p * (1.0 - p);
  }
  return sq - sum * sum / n;
}

}  // namespace

void DecisionTree::fit(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                       const std::vector<int>& samples, const TreeConfig& config, Rng& rng) {
  nodes_.clear();
  std::vector<int> work = samples;
  build(X, y, work, 0, static_cast<int>(work.size()), 0, config, rng);
}

int DecisionTree::build(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                        std::vector<int>& samples, int begin, int end, int depth,
                        const TreeConfig& config, Rng& rng) {
  const int node_id = static_cast<int>(nodes_.size());
  nodes_.emplace_back();

  const int n = end - begin;
  double sum = 0.0;
  for (int i = begin; i < end; ++i) sum += y(samples[static_cast<std::size_t>(i)]);
  nodes_[static_cast<std::size_t>(node_id)].value = sum / static_cast<double>(n);

  const bool depth_ok = config.max_depth < 0 || depth < config.max_depth;
  if (!depth_ok || n < config.min_samples_split || n < 2) return node_id;
  if (node_impurity(y, samples, begin, end, config.classification) <= 1e-12) return node_id;

  const int p = static_cast<int>(X.cols());
  thread_local std::vector<int> features;
  features.resize(static_cast<std::size_t>(p));
  std::iota(features.begin(), features.end(), 0);
  int n_features = p;
  if (config.max_features > 0 && config.max_features < p) {
    // Partial Fisher-Yates, then sort the chosen prefix so candidate order
    // (and therefore tie-breaking) stays by feature index.
    for (int i = 0; i < config.max_features; ++i) {
      const int j = i + static_cast<int>(rng.uniform_int(static_cast<std::uint64_t>(p - i)));
      std::swap(features[static_cast<std::size_t>(i)], features[static_cast<std::size_t>(j)]);
    }
    n_features = config.max_features;
    std::sort(features.begin(), features.begin() + n_features);
  }

  SplitChoice best;
  for (int fi = 0; fi < n_features; ++fi) {
    scan_feature(X, y, samples, begin, end, features[static_cast<std::size_t>(fi)],
                 config.classification, best);
  }
  if (best.feature < 0) return node_id;

  const int mid = begin + best.left_count;
  std::stable_partition(samples.begin() + begin, samples.begin() + end, [&](int row) {
    return X(row, best.feature) <= best.threshold;
  });

  nodes_[static_cast<std::size_t>(node_id)].feature = best.feature;
  nodes_[static_cast<std::size_t>(node_id)].threshold = best.threshold;
  const int left = build(X, y, samples, begin, mid, depth + 1, config, rng);
  nodes_[static_cast<std::size_t>(node_id)].left = left;
  const int right = build(X, y, samples, mid, end, depth + 1, config, rng);
  nodes_[static_cast<std::size_t>(node_id)].right = right;
  return node_id;
}

double DecisionTree::predict_row(const Eigen::Ref<const Eigen::RowVectorXd>& row) const {
  int node = 0;
  while (nodes_[static_cast<std::size_t>(node)].feature >= 0) {
    const auto& nd = nodes_[static_cast<std::size_t>(node)];
    node = row(nd.feature) <= nd.threshold ? nd.left : nd.right;
  }
  return nodes_[static_cast<std::size_t>(node)].value;
}

int DecisionTree::leaf_index(const Eigen::MatrixXd& X, int row) const {
  int node = 0;
  while (nodes_[static_cast<std::size_t>(node)].feature >= 0) {
    const auto& nd = nodes_[static_cast<std::size_t>(node)];
    node = X(row, nd.feature) <= nd.threshold ? nd.left : nd.right;
  }
  return node;
}

void DecisionTree::relabel_leaves(const Eigen::MatrixXd& X, const std::vector<int>& samples,
                                  const Eigen::VectorXd& numerator,
                                  const Eigen::VectorXd& denominator) {
  std::vector<double> num(nodes_.size(), 0.0), den(nodes_.size(), 0.0);
  for (int row : samples) {
    const int leaf = leaf_index(X, row);
    num[static_cast<std::size_t>(leaf)] += numerator(row);
    den[static_cast<std::size_t>(leaf)] += denominator(row);
  }
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    if (nodes_[i].feature < 0) {
      nodes_[i].value = den[i] > 1e-12 ? num[i] / den[i] : 0.0;
    }
  }
}

}  // namespace itemgauge::screen
