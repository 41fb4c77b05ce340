#include "itemgauge/screen.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <sstream>

#include "itemgauge/parallel.hpp"
#include "itemgauge/stats.hpp"

namespace itemgauge::screen {

namespace {

constexpr double kNan = std::numeric_limits<double>::quiet_NaN();

double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

std::string format_double(double v) {
  std::ostringstream os;
  os << v;
  return os.str();
}

}  // namespace

std::string to_string(ModelFamily f) {
  switch (f) {
    case ModelFamily::RidgeLinear: return "ridge_linear";
    case ModelFamily::LogisticL2: return "logistic_l2";
    case ModelFamily::RandomForest: return "random_forest";
    case ModelFamily::GradientBoosting: return "gradient_boosting";
  }
  return "unknown";
}

std::optional<ModelFamily> model_family_from_string(std::string_view s) {
  if (s == "ridge_linear") return ModelFamily::RidgeLinear;
  if (s == "logistic_l2") return ModelFamily::LogisticL2;
  if (s == "random_forest") return ModelFamily::RandomForest;
  if (s == "gradient_boosting") return ModelFamily::GradientBoosting;
  return std::nullopt;
}

std::string ModelSpec::key() const {
  std::ostringstream os;
  os << to_string(family);
  switch (family) {
    case ModelFamily::RidgeLinear:
    case ModelFamily::LogisticL2:
      os << "(penalty=" << format_double(penalty_weight) << ")";
      break;
    case ModelFamily::RandomForest:
      os << "(n_estimators=" << n_estimators << ",max_depth=";
      os << (max_depth < 0 ? std::string("none") : std::to_string(max_depth));
      os << ",min_samples_split=" << min_samples_split << ")";
      break;
    case ModelFamily::GradientBoosting:
      os << "(n_estimators=" << n_estimators << ",learning_rate=" << format_double(learning_rate)
         << ",max_depth=" << max_depth << ")";
      break;
  }
  return os.str();
}

std::vector<ModelSpec> paper_grid(ModelFamily family) {
  std::vector<ModelSpec> grid;
  switch (family) {
    case ModelFamily::RidgeLinear:
    case ModelFamily::LogisticL2:
      for (int i = -4; i <= 4; ++i) {
        ModelSpec s;
        s.family = family;
        s.penalty_weight = std::pow(10.0, i);
        grid.push_back(s);
      }
      break;
    case ModelFamily::RandomForest:
      for (int n_estimators : {50, 100, 200, 300}) {
        for (int max_depth : {-1, 5, 10, 20}) {
          for (int min_split : {2, 5, 10}) {
            ModelSpec s;
            s.family = family;
            s.n_estimators = n_estimators;
            s.max_depth = max_depth;
            s.min_samples_split = min_split;
            grid.push_back(s);
          }
        }
      }
      break;
    case ModelFamily::GradientBoosting:
      for (int n_estimators : {50, 100, 200, 300}) {
        for (double lr : {0.001, 0.01, 0.1, 0.2, 0.3}) {
          for (int max_depth : {3, 5, 7, 10}) {
            ModelSpec s;
            s.family = family;
            s.n_estimators = n_estimators;
            s.learning_rate = lr;
            s.max_depth = max_depth;
            grid.push_back(s);
          }
        }
      }
      break;
  }
  return grid;
}

std::vector<ModelSpec> small_grid(ModelFamily family) {
  std::vector<ModelSpec> grid;
  switch (family) {
    case ModelFamily::RidgeLinear:
    case ModelFamily::LogisticL2:
      for (int i : {-2, 0, 2}) {
        ModelSpec s;
        s.family = family;
        s.penalty_weight = std::pow(10.0, i);
        grid.push_back(s);
      }
      break;
    case ModelFamily::RandomForest:
      for (int n_estimators : {50, 100}) {
        for (int max_depth : {-1, 10}) {
          ModelSpec s;
          s.family = family;
          s.n_estimators = n_estimators;
          s.max_depth = max_depth;
          s.min_samples_split = 2;
          grid.push_back(s);
        }
      }
      break;
    case ModelFamily::GradientBoosting:
      for (int n_estimators : {50, 100}) {
        for (double lr : {0.1, 0.3}) {
          ModelSpec s;
          s.family = family;
          s.n_estimators = n_estimators;
          s.learning_rate = lr;
          s.max_depth = 3;
          grid.push_back(s);
        }
      }
      break;
  }
  return grid;
}

std::string to_string(Target t) {
  switch (t) {
    case Target::Alpha: return "alpha";
    case Target::Delta: return "delta";
    case Target::LowDisc: return "low-disc";
    case Target::LowDiff: return "low-diff";
    case Target::HighDiff: return "high-diff";
  }
  return "unknown";
}

std::optional<Target> target_from_string(std::string_view s) {
  if (s == "alpha") return Target::Alpha;
  if (s == "delta") return Target::Delta;
  if (s == "low-disc") return Target::LowDisc;
  if (s == "low-diff") return Target::LowDiff;
  if (s == "high-diff") return Target::HighDiff;
  return std::nullopt;
}

bool is_classification(Target t) {
  return t == Target::LowDisc || t == Target::LowDiff || t == Target::HighDiff;
}

Eigen::MatrixXd design_from(const std::vector<AnalysisTuple>& dataset) {
  return stats::flag_design(dataset);
}

Eigen::VectorXd target_from(const std::vector<AnalysisTuple>& dataset, Target target,
                            const irt::FlagThresholds& thresholds) {
  Eigen::VectorXd y(static_cast<long>(dataset.size()));
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    const auto& t = dataset[i];
    double v = 0.0;
    switch (target) {
      case Target::Alpha: v = t.alpha; break;
      case Target::Delta: v = t.delta; break;
      case Target::LowDisc: v = t.alpha < thresholds.disc_threshold ? 1.0 : 0.0; break;
      case Target::LowDiff: v = t.delta < thresholds.low_diff_threshold ? 1.0 : 0.0; break;
      case Target::HighDiff: v = t.delta > thresholds.high_diff_threshold ? 1.0 : 0.0; break;
    }
    y(static_cast<long>(i)) = v;
  }
  return y;
}

Eigen::VectorXd fit_ridge(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                          double penalty_weight) {
  const long n = X.rows();
  const long p = X.cols();
  if (n == 0) throw InsufficientData("fit_ridge: empty design");
  Eigen::MatrixXd Z(n, p + 1);
  Z.col(0).setOnes();
  Z.rightCols(p) = X;
  Eigen::MatrixXd gram = Z.transpose() * Z;
  for (long j = 1; j <= p; ++j) gram(j, j) += penalty_weight;
  return gram.ldlt().solve(Z.transpose() * y);
}

double logistic_loss(const Eigen::MatrixXd& X, const Eigen::VectorXd& labels,
                     const Eigen::VectorXd& coef, double penalty_weight) {
  const long n = X.rows();
  double loss = 0.0;
  for (long i = 0; i < n; ++i) {
    const double z = coef(0) + X.row(i).dot(coef.tail(X.cols()));
    // log(1 + exp(z)) - y z, stably
    const double softplus = z > 0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z));
    loss += softplus - labels(i) * z;
  }
  loss += 0.5 * penalty_weight * coef.tail(X.cols()).squaredNorm();
  return loss;
}

Eigen::VectorXd logistic_gradient(const Eigen::MatrixXd& X, const Eigen::VectorXd& labels,
                                  const Eigen::VectorXd& coef, double penalty_weight) {
  const long n = X.rows();
  const long p = X.cols();
  Eigen::VectorXd grad = Eigen::VectorXd::Zero(p + 1);
  for (long i = 0; i < n; ++i) {
    const double z = coef(0) + X.row(i).dot(coef.tail(p));
    const double err = sigmoid(z) - labels(i);
    grad(0) += err;
    grad.tail(p) += err * X.row(i).transpose();
  }
  grad.tail(p) += penalty_weight * coef.tail(p);
  return grad;
}

Eigen::VectorXd fit_logistic(const Eigen::MatrixXd& X, const Eigen::VectorXd& labels,
                             double penalty_weight) {
  const long n = X.rows();
  const long p = X.cols();
  double positives = labels.sum();
  if (positives <= 0.0 || positives >= static_cast<double>(n))
    throw SingleClass("fit_logistic: both classes must be present");

  Eigen::VectorXd coef = Eigen::VectorXd::Zero(p + 1);
  constexpr int kMaxIter = 200;
  constexpr double kTol = 1e-8;
  for (int iter = 0; iter < kMaxIter; ++iter) {
    Eigen::VectorXd grad = logistic_gradient(X, labels, coef, penalty_weight);
    if (grad.norm() < kTol) return coef;

    // Newton step with penalized Hessian.
    Eigen::MatrixXd hess = Eigen::MatrixXd::Zero(p + 1, p + 1);
    for (long i = 0; i < n; ++i) {
      const double z = coef(0) + X.row(i).dot(coef.tail(p));
      const double s = sigmoid(z);
      const double w = std::max(s * (1.0 - s), 1e-12);
      Eigen::VectorXd zi(p + 1);
      zi(0) = 1.0;
      zi.tail(p) = X.row(i).transpose();
      hess.noalias() += w * zi * zi.transpose();
    }
    for (long j = 1; j <= p; ++j) hess(j, j) += penalty_weight;

    const Eigen::VectorXd step = hess.ldlt().solve(grad);
    const double base_loss = logistic_loss(X, labels, coef, penalty_weight);
    double scale = 1.0;
    bool accepted = false;
    for (int bt = 0; bt < 40; ++bt) {
      const Eigen::VectorXd cand = coef - scale * step;
      if (logistic_loss(X, labels, cand, penalty_weight) <= base_loss) {
        coef = cand;
        accepted = true;
        break;
      }
      scale *= 0.5;
    }
    if (!accepted) break;
  }
  if (logistic_gradient(X, labels, coef, penalty_weight).norm() >= kTol) {
    throw NonConvergence("fit_logistic: gradient norm above tolerance at iteration cap");
  }
  return coef;
}

double ForestModel::predict_row(const Eigen::Ref<const Eigen::RowVectorXd>& row) const {
  double sum = 0.0;
  for (const auto& tree : trees) sum += tree.predict_row(row);
  return trees.empty() ? 0.0 : sum / static_cast<double>(trees.size());
}

ForestModel fit_forest(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, const ModelSpec& spec,
                       std::uint64_t seed, bool classification) {
  const long n = X.rows();
  const int p = static_cast<int>(X.cols());
  if (n < spec.min_samples_split) throw InsufficientData("fit_forest: too few rows");

  ForestModel model;
  model.classification = classification;
  model.trees.resize(static_cast<std::size_t>(spec.n_estimators));

  TreeConfig config;
  config.max_depth = spec.max_depth;
  config.min_samples_split = spec.min_samples_split;
  config.classification = classification;
  config.max_features = classification
                            ? std::max(1, static_cast<int>(std::sqrt(static_cast<double>(p))))
                            : std::max(1, p / 3);

  for (int t = 0; t < spec.n_estimators; ++t) {
    Rng rng(derive_seed(seed, static_cast<std::uint64_t>(t)));
    std::vector<int> bootstrap(static_cast<std::size_t>(n));
    for (auto& idx : bootstrap)
      idx = static_cast<int>(rng.uniform_int(static_cast<std::uint64_t>(n)));
    model.trees[static_cast<std::size_t>(t)].fit(X, y, bootstrap, config, rng);
  }
  return model;
}

double GbtModel::raw_score(const Eigen::Ref<const Eigen::RowVectorXd>& row) const {
  double score = base_score;
  for (const auto& tree : trees) score += learning_rate * tree.predict_row(row);
  return score;
}

double GbtModel::predict_row(const Eigen::Ref<const Eigen::RowVectorXd>& row) const {
  const double raw = raw_score(row);
  return classification ? sigmoid(raw) : raw;
}

GbtModel fit_gbt(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, const ModelSpec& spec,
                 std::uint64_t seed, bool classification) {
  const long n = X.rows();
  if (n < 2) throw InsufficientData("fit_gbt: too few rows");

  GbtModel model;
  model.classification = classification;
  model.learning_rate = spec.learning_rate;
  if (classification) {
    const double p_bar = std::clamp(y.mean(), 1e-12, 1.0 - 1e-12);
    model.base_score = std::log(p_bar / (1.0 - p_bar));
  } else {
    model.base_score = y.mean();
  }

  TreeConfig config;
  config.max_depth = spec.max_depth > 0 ? spec.max_depth : 3;
  config.min_samples_split = 2;
  config.classification = false;  // trees fit pseudo-residuals by least squares
  config.max_features = -1;

  std::vector<int> all_rows(static_cast<std::size_t>(n));
  std::iota(all_rows.begin(), all_rows.end(), 0);

  Eigen::VectorXd score = Eigen::VectorXd::Constant(n, model.base_score);
  model.trees.reserve(static_cast<std::size_t>(spec.n_estimators));
  for (int stage = 0; stage < spec.n_estimators; ++stage) {
    Rng rng(derive_seed(seed, static_cast<std::uint64_t>(stage)));
    DecisionTree tree;
    if (classification) {
      Eigen::VectorXd prob(n), grad(n), hess(n);
      for (long i = 0; i < n; ++i) {
        prob(i) = sigmoid(score(i));
        grad(i) = y(i) - prob(i);
        hess(i) = std::max(prob(i) * (1.0 - prob(i)), 1e-12);
      }
      tree.fit(X, grad, all_rows, config, rng);
      tree.relabel_leaves(X, all_rows, grad, hess);
    } else {
      const Eigen::VectorXd residual = y - score;
      tree.fit(X, residual, all_rows, config, rng);
    }
    for (long i = 0; i < n; ++i) {
      score(i) += spec.learning_rate * tree.predict_row(X.row(i));
    }
    model.trees.push_back(std::move(tree));

    double loss = 0.0;
    if (classification) {
      for (long i = 0; i < n; ++i) {
        const double z = score(i);
        const double softplus = z > 0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z));
        loss += softplus - y(i) * z;
      }
      loss /= static_cast<double>(n);
    } else {
      loss = (y - score).squaredNorm() / static_cast<double>(n);
    }
    model.stage_losses.push_back(loss);
  }
  return model;
}

PrCurve pr_curve(std::span<const double> scores, std::span<const int> labels) {
  if (scores.size() != labels.size()) throw DegenerateInput("pr_curve: length mismatch");
  const std::size_t n = scores.size();
  long total_pos = 0;
  for (int l : labels) total_pos += l;
  if (total_pos == 0) throw SingleClass("pr_curve: no positive labels");

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });

  PrCurve curve;
  long tp = 0, fp = 0;
  std::size_t i = 0;
  while (i < n) {
    const double threshold = scores[order[i]];
    // Consume the whole tie block at this score.
    while (i < n && scores[order[i]] == threshold) {
      if (labels[order[i]]) {
        ++tp;
      } else {
        ++fp;
      }
      ++i;
    }
    curve.thresholds.push_back(threshold);
    curve.precision.push_back(static_cast<double>(tp) / static_cast<double>(tp + fp));
    curve.recall.push_back(static_cast<double>(tp) / static_cast<double>(total_pos));
  }
  return curve;
}

ThresholdChoice select_threshold(const PrCurve& curve, double target_precision) {
  if (curve.thresholds.empty()) throw DegenerateInput("select_threshold: empty curve");
  // Thresholds are descending; scan from the lowest upward.
  for (std::size_t i = curve.thresholds.size(); i-- > 0;) {
    if (curve.precision[i] >= target_precision) {
      return {curve.thresholds[i], curve.precision[i], curve.recall[i]};
    }
  }
  throw PrecisionUnreachable("select_threshold: no threshold reaches precision " +
                             format_double(target_precision));
}

double auc(std::span<const double> scores, std::span<const int> labels) {
  if (scores.size() != labels.size()) throw DegenerateInput("auc: length mismatch");
  const std::size_t n = scores.size();
  long pos = 0;
  for (int l : labels) pos += l;
  const long neg = static_cast<long>(n) - pos;
  if (pos == 0 || neg == 0) throw SingleClass("auc: both classes must be present");

  std::vector<double> values(scores.begin(), scores.end());
  const std::vector<double> ranks = stats::midrank(values);
  double rank_sum_pos = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (labels[i]) rank_sum_pos += ranks[i];
  }
  const double u = rank_sum_pos - static_cast<double>(pos) * (static_cast<double>(pos) + 1.0) / 2.0;
  return u / (static_cast<double>(pos) * static_cast<double>(neg));
}

double accuracy_at_half(std::span<const double> scores, std::span<const int> labels) {
  std::size_t correct = 0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    const int pred = scores[i] >= 0.5 ? 1 : 0;
    if (pred == labels[i]) ++correct;
  }
  return scores.empty() ? 0.0 : static_cast<double>(correct) / static_cast<double>(scores.size());
}

double f1_at_half(std::span<const double> scores, std::span<const int> labels) {
  long tp = 0, fp = 0, fn = 0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    const int pred = scores[i] >= 0.5 ? 1 : 0;
    if (pred == 1 && labels[i] == 1) ++tp;
    if (pred == 1 && labels[i] == 0) ++fp;
    if (pred == 0 && labels[i] == 1) ++fn;
  }
  const long denom = 2 * tp + fp + fn;
  return denom == 0 ? 0.0 : 2.0 * static_cast<double>(tp) / static_cast<double>(denom);
}

ClassificationMetrics majority_baseline(std::span<const int> labels) {
  long pos = 0;
  for (int l : labels) pos += l;
  const double n = static_cast<double>(labels.size());
  const double prevalence = n > 0 ? static_cast<double>(pos) / n : 0.0;
  ClassificationMetrics m;
  const double majority_score = prevalence >= 0.5 ? 1.0 : 0.0;
  m.accuracy = std::max(prevalence, 1.0 - prevalence);
  m.auc = 0.5;  // constant scores rank nothing
  m.f1 = majority_score >= 0.5 && pos > 0
             ? 2.0 * prevalence / (1.0 + prevalence)
             : 0.0;
  return m;
}

// ---------------------------------------------------------------------------
// Nested cross-validation
// ---------------------------------------------------------------------------

namespace {

// Deterministic fold assignment. For stratified folds the classes are
// shuffled separately and dealt round-robin so every fold receives its share
// of positives.
std::vector<int> fold_assignment(const Eigen::VectorXd& y, bool stratified, int n_folds,
                                 Rng& rng) {
  const long n = y.size();
  std::vector<int> assignment(static_cast<std::size_t>(n), 0);
  std::vector<int> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  for (long i = n - 1; i > 0; --i) {
    const long j = static_cast<long>(rng.uniform_int(static_cast<std::uint64_t>(i + 1)));
    std::swap(order[static_cast<std::size_t>(i)], order[static_cast<std::size_t>(j)]);
  }
  if (!stratified) {
    for (std::size_t k = 0; k < order.size(); ++k) {
      assignment[static_cast<std::size_t>(order[k])] = static_cast<int>(k % static_cast<std::size_t>(n_folds));
    }
    return assignment;
  }
  int counter_pos = 0, counter_neg = 0;
  for (int row : order) {
    if (y(row) >= 0.5) {
      assignment[static_cast<std::size_t>(row)] = counter_pos++ % n_folds;
    } else {
      assignment[static_cast<std::size_t>(row)] = counter_neg++ % n_folds;
    }
  }
  return assignment;
}

Eigen::MatrixXd take_rows(const Eigen::MatrixXd& X, const std::vector<int>& rows) {
  Eigen::MatrixXd out(static_cast<long>(rows.size()), X.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) out.row(static_cast<long>(i)) = X.row(rows[i]);
  return out;
}

Eigen::VectorXd take(const Eigen::VectorXd& y, const std::vector<int>& rows) {
  Eigen::VectorXd out(static_cast<long>(rows.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) out(static_cast<long>(i)) = y(rows[i]);
  return out;
}

// Fit one spec and score rows of X_test; returns predicted values
// (probabilities for classification).
std::vector<double> fit_and_predict(const Eigen::MatrixXd& X_train, const Eigen::VectorXd& y_train,
                                    const Eigen::MatrixXd& X_test, const ModelSpec& spec,
                                    std::uint64_t seed, bool classification) {
  std::vector<double> preds(static_cast<std::size_t>(X_test.rows()), 0.0);
  switch (spec.family) {
    case ModelFamily::RidgeLinear: {
      const Eigen::VectorXd coef = fit_ridge(X_train, y_train, spec.penalty_weight);
      for (long i = 0; i < X_test.rows(); ++i) {
        preds[static_cast<std::size_t>(i)] = coef(0) + X_test.row(i).dot(coef.tail(X_test.cols()));
      }
      break;
    }
    case ModelFamily::LogisticL2: {
      const Eigen::VectorXd coef = fit_logistic(X_train, y_train, spec.penalty_weight);
      for (long i = 0; i < X_test.rows(); ++i) {
        preds[static_cast<std::size_t>(i)] =
            sigmoid(coef(0) + X_test.row(i).dot(coef.tail(X_test.cols())));
      }
      break;
    }
    case ModelFamily::RandomForest: {
      const ForestModel model = fit_forest(X_train, y_train, spec, seed, classification);
      for (long i = 0; i < X_test.rows(); ++i) {
        preds[static_cast<std::size_t>(i)] = model.predict_row(X_test.row(i));
      }
      break;
    }
    case ModelFamily::GradientBoosting: {
      const GbtModel model = fit_gbt(X_train, y_train, spec, seed, classification);
      for (long i = 0; i < X_test.rows(); ++i) {
        preds[static_cast<std::size_t>(i)] = model.predict_row(X_test.row(i));
      }
      break;
    }
  }
  return preds;
}

double score_rmse(const std::vector<double>& preds, const Eigen::VectorXd& y) {
  double sse = 0.0;
  for (std::size_t i = 0; i < preds.size(); ++i) {
    const double d = preds[i] - y(static_cast<long>(i));
    sse += d * d;
  }
  return std::sqrt(sse / static_cast<double>(preds.size()));
}

}  // namespace

CvResult cv_evaluate(const std::vector<AnalysisTuple>& dataset, Target target,
                     const std::vector<ModelSpec>& grid, const CvConfig& cv,
                     const irt::FlagThresholds& thresholds, int jobs) {
  if (cv.n_folds < 2) throw DegenerateInput("cv_evaluate: n_folds must be >= 2");
  if (grid.empty()) throw DegenerateInput("cv_evaluate: empty model grid");
  if (dataset.size() < static_cast<std::size_t>(5 * cv.n_folds))
    throw InsufficientData("cv_evaluate: dataset smaller than 5 x n_folds");

  const bool classification = is_classification(target);
  const Eigen::MatrixXd X = design_from(dataset);
  const Eigen::VectorXd y = target_from(dataset, target, thresholds);

  if (classification) {
    const long positives = static_cast<long>(y.sum());
    if (positives < cv.n_folds) {
      throw TaskInfeasible("cv_evaluate: only " + std::to_string(positives) +
                           " positive items for " + std::to_string(cv.n_folds) +
                           "-fold classification of target " + to_string(target));
    }
  }

  Rng outer_rng(derive_seed(cv.seed, 0xF01Dull));
  const std::vector<int> outer_fold =
      fold_assignment(y, classification && cv.stratified, cv.n_folds, outer_rng);

  CvResult result;
  result.folds.resize(static_cast<std::size_t>(cv.n_folds));

  parallel_for(static_cast<std::size_t>(cv.n_folds), jobs, [&](std::size_t fold_idx) {
    const int k = static_cast<int>(fold_idx);
    std::vector<int> train_rows, test_rows;
    for (long i = 0; i < y.size(); ++i) {
      (outer_fold[static_cast<std::size_t>(i)] == k ? test_rows : train_rows)
          .push_back(static_cast<int>(i));
    }
    const Eigen::MatrixXd X_train = take_rows(X, train_rows);
    const Eigen::VectorXd y_train = take(y, train_rows);
    const Eigen::MatrixXd X_test = take_rows(X, test_rows);
    const Eigen::VectorXd y_test = take(y, test_rows);

    // Inner grid search on the training fold only.
    Rng inner_rng(derive_seed(cv.seed, 0x1221ull + static_cast<std::uint64_t>(k)));
    const std::vector<int> inner_fold =
        fold_assignment(y_train, classification && cv.stratified, cv.n_folds, inner_rng);

    double best_score = classification ? -std::numeric_limits<double>::infinity()
                                       : std::numeric_limits<double>::infinity();
    std::size_t best_idx = 0;
    bool any_scored = false;
    for (std::size_t g = 0; g < grid.size(); ++g) {
      double score_sum = 0.0;
      int scored_folds = 0;
      for (int ik = 0; ik < cv.n_folds; ++ik) {
        std::vector<int> fit_rows, val_rows;
        for (long i = 0; i < y_train.size(); ++i) {
          (inner_fold[static_cast<std::size_t>(i)] == ik ? val_rows : fit_rows)
              .push_back(static_cast<int>(i));
        }
        if (fit_rows.empty() || val_rows.empty()) continue;
        const Eigen::VectorXd y_fit = take(y_train, fit_rows);
        const Eigen::VectorXd y_val = take(y_train, val_rows);
        if (classification) {
          // Re-stratification keeps positives spread across inner folds, but
          // very small strata can still produce unusable folds; skip them.
          const double fit_pos = y_fit.sum();
          const double val_pos = y_val.sum();
          if (fit_pos == 0.0 || fit_pos == static_cast<double>(y_fit.size())) continue;
          if (val_pos == 0.0 || val_pos == static_cast<double>(y_val.size())) continue;
        }
        const std::uint64_t cell_seed =
            derive_seed(cv.seed, (static_cast<std::uint64_t>(k) << 32) | static_cast<std::uint64_t>(ik),
                        g);
        std::vector<double> preds;
        try {
          preds = fit_and_predict(take_rows(X_train, fit_rows), y_fit,
                                  take_rows(X_train, val_rows), grid[g], cell_seed,
                                  classification);
        } catch (const Error&) {
          continue;
        }
        if (classification) {
          std::vector<int> labels(val_rows.size());
          for (std::size_t i = 0; i < val_rows.size(); ++i)
            labels[i] = y_val(static_cast<long>(i)) >= 0.5 ? 1 : 0;
          score_sum += auc(preds, labels);
        } else {
          score_sum += score_rmse(preds, y_val);
        }
        ++scored_folds;
      }
      if (scored_folds == 0) continue;
      const double mean_score = score_sum / static_cast<double>(scored_folds);
      const bool better = classification ? mean_score > best_score : mean_score < best_score;
      if (!any_scored || better) {
        best_score = mean_score;
        best_idx = g;
        any_scored = true;
      }
    }
    if (!any_scored) {
      throw TaskInfeasible("cv_evaluate: no grid cell could be scored on outer fold " +
                           std::to_string(k));
    }

    // Refit the selected spec on the full outer-training fold.
    const std::uint64_t final_seed =
        derive_seed(cv.seed, 0xFEEDull + static_cast<std::uint64_t>(k), best_idx);
    const std::vector<double> preds =
        fit_and_predict(X_train, y_train, X_test, grid[best_idx], final_seed, classification);

    FoldOutcome outcome;
    outcome.chosen = grid[best_idx];
    if (classification) {
      std::vector<int> labels(test_rows.size());
      for (std::size_t i = 0; i < test_rows.size(); ++i)
        labels[i] = y_test(static_cast<long>(i)) >= 0.5 ? 1 : 0;
      ClassificationMetrics m;
      m.accuracy = accuracy_at_half(preds, labels);
      m.f1 = f1_at_half(preds, labels);
      bool has_both = false;
      long pos = 0;
      for (int l : labels) pos += l;
      has_both = pos > 0 && pos < static_cast<long>(labels.size());
      m.auc = has_both ? auc(preds, labels) : kNan;
      outcome.metrics.classification = m;
    } else {
      RegressionMetrics m;
      m.rmse = score_rmse(preds, y_test);
      const double mean_test = y_test.mean();
      double sse = 0.0, sst = 0.0;
      for (std::size_t i = 0; i < preds.size(); ++i) {
        const double err = preds[i] - y_test(static_cast<long>(i));
        sse += err * err;
        const double dev = y_test(static_cast<long>(i)) - mean_test;
        sst += dev * dev;
      }
      m.r_squared = sst > 0.0 ? 1.0 - sse / sst : 0.0;
      try {
        std::vector<double> actual(preds.size());
        for (std::size_t i = 0; i < preds.size(); ++i) actual[i] = y_test(static_cast<long>(i));
        m.pearson_r = stats::pearson(preds, actual).r;
      } catch (const DegenerateInput&) {
        m.pearson_r = 0.0;
      }
      outcome.metrics.regression = m;
    }
    result.folds[fold_idx] = std::move(outcome);
  });

  // Modal selection across outer folds; ties break toward grid order.
  std::map<std::string, int> votes;
  for (const auto& fold : result.folds) votes[fold.chosen.key()]++;
  int best_votes = -1;
  for (const auto& spec : grid) {
    const auto it = votes.find(spec.key());
    if (it != votes.end() && it->second > best_votes) {
      best_votes = it->second;
      result.best = spec;
    }
  }

  if (is_classification(target)) {
    ClassificationMetrics mean;
    int n_auc = 0;
    for (const auto& fold : result.folds) {
      mean.accuracy += fold.metrics.classification->accuracy;
      mean.f1 += fold.metrics.classification->f1;
      if (!std::isnan(fold.metrics.classification->auc)) {
        mean.auc += fold.metrics.classification->auc;
        ++n_auc;
      }
    }
    const double nf = static_cast<double>(result.folds.size());
    mean.accuracy /= nf;
    mean.f1 /= nf;
    mean.auc = n_auc > 0 ? mean.auc / static_cast<double>(n_auc) : kNan;
    result.mean_metrics.classification = mean;
  } else {
    RegressionMetrics mean;
    for (const auto& fold : result.folds) {
      mean.rmse += fold.metrics.regression->rmse;
      mean.r_squared += fold.metrics.regression->r_squared;
      mean.pearson_r += fold.metrics.regression->pearson_r;
    }
    const double nf = static_cast<double>(result.folds.size());
    mean.rmse /= nf;
    mean.r_squared /= nf;
    mean.pearson_r /= nf;
    result.mean_metrics.regression = mean;
  }
  return result;
}

}  // namespace itemgauge::screen
