#pragma once

#include <Eigen/Dense>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "itemgauge/types.hpp"

namespace itemgauge::stats {

enum class CorrMethod { Pearson, Spearman };

std::string to_string(CorrMethod m);

struct CorrelationResult {
  CorrMethod method = CorrMethod::Pearson;
  double r = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
  double p_raw = 1.0;
  double p_adjusted = 1.0;  // filled by family-wise adjustment
  std::size_t n = 0;
};

// Sample Pearson correlation; 95% CI by Fisher z-transform, two-sided p from
// the t distribution with n-2 df. Throws DegenerateInput for n < 3 or a
// constant vector.
CorrelationResult pearson(std::span<const double> x, std::span<const double> y);

// Pearson applied to mid-ranks (ties get average rank).
CorrelationResult spearman(std::span<const double> x, std::span<const double> y);

std::vector<double> midrank(std::span<const double> x);

struct HolmResult {
  std::vector<double> p_adjusted;
  std::vector<bool> reject;
};

// Holm-Bonferroni step-down adjustment mapped back to input order.
HolmResult holm_bonferroni(std::span<const double> p_values, double alpha);

struct RegressionFit {
  double intercept = 0.0;
  double intercept_se = 0.0;
  double intercept_t = 0.0;
  double intercept_p = 1.0;

  // One entry per predictor column, NaN where the column was dropped.
  std::vector<double> coefficients;
  std::vector<bool> dropped;  // all-zero predictor columns
  std::vector<double> robust_se;
  std::vector<double> t_stats;
  std::vector<double> p_raw;
  std::vector<double> p_adjusted;  // NaN until family adjustment
  std::vector<double> ci_low;
  std::vector<double> ci_high;

  std::vector<double> fitted;
  std::vector<double> residuals;
  double r_squared = 0.0;
  std::size_t n = 0;
  long df_resid = 0;
};

// OLS with HC3 heteroscedasticity-consistent standard errors. X holds the
// predictor columns only; the intercept is handled internally. All-zero
// predictor columns are dropped and reported with NaN statistics. Throws
// InsufficientData (n <= parameters) or RankDeficient (collinearity that
// survives the all-zero drop).
RegressionFit ols_hc3(const Eigen::MatrixXd& X, const Eigen::VectorXd& y);

// VIF_j = 1 / (1 - R^2_j) from regressing column j on the others plus an
// intercept. +inf when R^2_j = 1 within 1e-12; NaN for constant columns.
std::vector<double> vif(const Eigen::MatrixXd& X);

// Sum of squared first differences over sum of squares. Throws
// DegenerateInput when fewer than 2 residuals or all residuals are zero.
double durbin_watson(std::span<const double> residuals);

struct BreuschPagan {
  double statistic = 0.0;
  double p_value = 1.0;
};

// LM statistic n*R^2 from regressing squared residuals on the design;
// chi-square reference with (#predictors) df.
BreuschPagan breusch_pagan(const Eigen::MatrixXd& X, std::span<const double> residuals);

struct DiagnosticsReport {
  std::vector<double> vif;
  double durbin_watson = 0.0;
  BreuschPagan breusch_pagan;
};

// ---------------------------------------------------------------------------
// Research-question analyses
// ---------------------------------------------------------------------------

struct Rq1Cell {
  std::string stratum;  // "all" or a domain name
  std::string family;   // "discrimination" | "difficulty"
  CorrelationResult result;
  bool reject = false;
  bool skipped = false;
  std::string note;
};

struct Rq1Report {
  double alpha = 0.05;
  std::vector<Rq1Cell> cells;
};

// Correlation of per-item flaw count with discrimination and difficulty,
// pooled and per domain. Holm-Bonferroni applied within the discrimination
// family and within the difficulty family separately.
Rq1Report rq1_analysis(const std::vector<AnalysisTuple>& dataset, double alpha);

struct Rq2Cell {
  std::string stratum;
  std::string target;  // "difficulty" | "discrimination"
  RegressionFit fit;
  std::vector<bool> reject;  // per criterion
  DiagnosticsReport diagnostics;
  bool skipped = false;
  std::string note;
};

struct Rq2Report {
  double alpha = 0.05;
  std::vector<Rq2Cell> cells;
};

// Per-criterion regressions of difficulty and discrimination on the 19 flaw
// indicators, pooled and per domain, with Holm-Bonferroni across the 19
// coefficients within each (target, stratum) cell.
Rq2Report rq2_analysis(const std::vector<AnalysisTuple>& dataset, double alpha);

// Design matrix of the 19 flaw indicator columns.
Eigen::MatrixXd flag_design(const std::vector<AnalysisTuple>& dataset);

}  // namespace itemgauge::stats
