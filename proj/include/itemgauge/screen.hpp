#pragma once

#include <Eigen/Dense>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "itemgauge/irt.hpp"
#include "itemgauge/tree.hpp"
#include "itemgauge/types.hpp"

namespace itemgauge::screen {

enum class ModelFamily { RidgeLinear, LogisticL2, RandomForest, GradientBoosting };

std::string to_string(ModelFamily f);
std::optional<ModelFamily> model_family_from_string(std::string_view s);

struct ModelSpec {
  ModelFamily family = ModelFamily::RidgeLinear;
  double penalty_weight = 1.0;   // ridge / logistic
  int n_estimators = 100;        // forest / boosting
  int max_depth = -1;            // -1 = unbounded (forest); boosting grids use 3..10
  int min_samples_split = 2;     // forest
  double learning_rate = 0.1;    // boosting

  std::string key() const;  // stable identifier for reports
  bool operator==(const ModelSpec&) const = default;
};

// Hyperparameter grids. The "paper" profile is the full grid; "small" is a
// fast CI subset.
std::vector<ModelSpec> paper_grid(ModelFamily family);
std::vector<ModelSpec> small_grid(ModelFamily family);

enum class Target { Alpha, Delta, LowDisc, LowDiff, HighDiff };

std::string to_string(Target t);
std::optional<Target> target_from_string(std::string_view s);
bool is_classification(Target t);

struct CvConfig {
  int n_folds = 5;
  std::uint64_t seed = 0;
  bool stratified = true;  // classification only
};

struct RegressionMetrics {
  double rmse = 0.0;
  double r_squared = 0.0;
  double pearson_r = 0.0;
};

struct ClassificationMetrics {
  double accuracy = 0.0;
  double auc = 0.0;
  double f1 = 0.0;
};

struct MetricSet {
  std::optional<RegressionMetrics> regression;
  std::optional<ClassificationMetrics> classification;
};

struct FoldOutcome {
  ModelSpec chosen;
  MetricSet metrics;
};

struct CvResult {
  ModelSpec best;  // most frequently selected across outer folds
  MetricSet mean_metrics;
  std::vector<FoldOutcome> folds;
};

// Nested cross-validation: outer folds for evaluation, inner folds for grid
// search (RMSE for regression targets, AUC for classification). Metrics come
// only from held-out outer folds. Deterministic for a fixed seed; fold and
// grid randomness derive from (seed, fold index, grid index).
CvResult cv_evaluate(const std::vector<AnalysisTuple>& dataset, Target target,
                     const std::vector<ModelSpec>& grid, const CvConfig& cv,
                     const irt::FlagThresholds& thresholds, int jobs = 1);

// Extracts the modelling matrix and target vector used by cv_evaluate.
Eigen::MatrixXd design_from(const std::vector<AnalysisTuple>& dataset);
Eigen::VectorXd target_from(const std::vector<AnalysisTuple>& dataset, Target target,
                            const irt::FlagThresholds& thresholds);

// Ridge regression, intercept unpenalized; returns [intercept, slopes...].
Eigen::VectorXd fit_ridge(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                          double penalty_weight);

// L2-penalized logistic regression by Newton iterations from a zero start;
// intercept unpenalized. Throws SingleClass if labels are constant,
// NonConvergence if the gradient norm is still above tolerance at the
// iteration cap. Returns [intercept, slopes...].
Eigen::VectorXd fit_logistic(const Eigen::MatrixXd& X, const Eigen::VectorXd& labels,
                             double penalty_weight);

double logistic_loss(const Eigen::MatrixXd& X, const Eigen::VectorXd& labels,
                     const Eigen::VectorXd& coef, double penalty_weight);
Eigen::VectorXd logistic_gradient(const Eigen::MatrixXd& X, const Eigen::VectorXd& labels,
                                  const Eigen::VectorXd& coef, double penalty_weight);

struct ForestModel {
  std::vector<DecisionTree> trees;
  bool classification = false;
  double predict_row(const Eigen::Ref<const Eigen::RowVectorXd>& row) const;
};

// Bootstrap-aggregated trees with per-split feature subsampling: sqrt(p)
// features for classification, p/3 (min 1) for regression.
ForestModel fit_forest(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, const ModelSpec& spec,
                       std::uint64_t seed, bool classification);

struct GbtModel {
  double base_score = 0.0;
  double learning_rate = 0.1;
  std::vector<DecisionTree> trees;
  bool classification = false;
  // Raw additive score (log-odds for classification).
  double raw_score(const Eigen::Ref<const Eigen::RowVectorXd>& row) const;
  // Probability for classification, value for regression.
  double predict_row(const Eigen::Ref<const Eigen::RowVectorXd>& row) const;
  // Training loss after each stage (MSE or mean log-loss).
  std::vector<double> stage_losses;
};

// Stagewise boosting: least-squares residual fitting for regression,
// logistic gradient boosting with Newton leaf values for classification.
GbtModel fit_gbt(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, const ModelSpec& spec,
                 std::uint64_t seed, bool classification);

struct PrCurve {
  std::vector<double> thresholds;  // descending
  std::vector<double> precision;
  std::vector<double> recall;
};

// Precision/recall at every distinct score threshold (predict positive when
// score >= threshold). Throws SingleClass when there are no positives.
PrCurve pr_curve(std::span<const double> scores, std::span<const int> labels);

struct ThresholdChoice {
  double threshold = 0.0;
  double precision = 0.0;
  double recall = 0.0;
};

// Lowest threshold whose precision meets the target; throws
// PrecisionUnreachable otherwise.
ThresholdChoice select_threshold(const PrCurve& curve, double target_precision);

// Rank-sum AUC with ties counted 1/2. Throws SingleClass unless both classes
// are present.
double auc(std::span<const double> scores, std::span<const int> labels);

double accuracy_at_half(std::span<const double> scores, std::span<const int> labels);
double f1_at_half(std::span<const double> scores, std::span<const int> labels);

// Metrics of the constant majority-class classifier.
ClassificationMetrics majority_baseline(std::span<const int> labels);

}  // namespace itemgauge::screen
