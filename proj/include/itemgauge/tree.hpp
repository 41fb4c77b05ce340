#pragma once

#include <Eigen/Dense>
#include <vector>

#include "itemgauge/rng.hpp"

namespace itemgauge::screen {

struct TreeConfig {
  int max_depth = -1;  // -1 = unbounded
  int min_samples_split = 2;
  int max_features = -1;  // -1 = consider all features at every split
  bool classification = false;  // Gini impurity instead of variance
};

struct TreeNode {
  int feature = -1;  // -1 marks a leaf
  double threshold = 0.0;
  int left = -1;
  int right = -1;
  double value = 0.0;
};

// Exact greedy CART tree. Ties in split gain resolve to the lowest feature
// index and lowest threshold, so training is deterministic for a fixed rng
// state.
class DecisionTree {
 public:
  void fit(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, const std::vector<int>& samples,
           const TreeConfig& config, Rng& rng);

  double predict_row(const Eigen::Ref<const Eigen::RowVectorXd>& row) const;

  // Replaces each leaf value with sum(numerator)/sum(denominator) over the
  // training rows routed to it (Newton leaf values for boosting).
  void relabel_leaves(const Eigen::MatrixXd& X, const std::vector<int>& samples,
                      const Eigen::VectorXd& numerator, const Eigen::VectorXd& denominator);

  const std::vector<TreeNode>& nodes() const { return nodes_; }

 private:
  int build(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, std::vector<int>& samples,
            int begin, int end, int depth, const TreeConfig& config, Rng& rng);
  int leaf_index(const Eigen::MatrixXd& X, int row) const;

  std::vector<TreeNode> nodes_;
};

}  // namespace itemgauge::screen
