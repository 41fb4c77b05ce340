#include "itemgauge/stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "itemgauge/dist.hpp"

namespace itemgauge::stats {

namespace {

constexpr double kNan = std::numeric_limits<double>::quiet_NaN();
constexpr double kZ975 = 1.959963984540054;  // Phi^-1(0.975)

double mean_of(std::span<const double> x) {
  return std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size());
}

struct CorrelationInputs {
  double r;
  std::size_t n;
};

CorrelationInputs raw_pearson(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw DegenerateInput("correlation: length mismatch");
  const std::size_t n = x.size();
  if (n < 3) throw DegenerateInput("correlation: need at least 3 observations");
  const double mx = mean_of(x);
  const double my = mean_of(y);
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double dx = x[i] - mx;
    const double dy = y[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx <= 0.0 || syy <= 0.0) throw DegenerateInput("correlation: constant input vector");
  double r = sxy / std::sqrt(sxx * syy);
  r = std::clamp(r, -1.0, 1.0);
  return {r, n};
}

CorrelationResult finish_correlation(CorrMethod method, CorrelationInputs in) {
  CorrelationResult out;
  out.method = method;
  out.r = in.r;
  out.n = in.n;
  const double df = static_cast<double>(in.n) - 2.0;
  if (std::fabs(in.r) >= 1.0) {
    out.p_raw = 0.0;
  } else {
    const double t = in.r * std::sqrt(df / (1.0 - in.r * in.r));
    out.p_raw = dist::t_p_two_sided(t, df);
  }
  // Fisher z interval.
  if (in.n > 3 && std::fabs(in.r) < 1.0) {
    const double z = std::atanh(in.r);
    const double se = 1.0 / std::sqrt(static_cast<double>(in.n) - 3.0);
    out.ci_low = std::tanh(z - kZ975 * se);
    out.ci_high = std::tanh(z + kZ975 * se);
  } else {
    out.ci_low = -1.0;
    out.ci_high = 1.0;
  }
  out.p_adjusted = kNan;
  return out;
}

}  // namespace

std::string to_string(CorrMethod m) {
  return m == CorrMethod::Pearson ? "pearson" : "spearman";
}

CorrelationResult pearson(std::span<const double> x, std::span<const double> y) {
  return finish_correlation(CorrMethod::Pearson, raw_pearson(x, y));
}

std::vector<double> midrank(std::span<const double> x) {
  const std::size_t n = x.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return x[a] < x[b]; });
  std::vector<double> ranks(n, 0.0);
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n && x[order[j + 1]] == x[order[i]]) ++j;
    const double avg = 0.5 * static_cast<double>(i + j) + 1.0;  // 1-based average rank
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = avg;
    i = j + 1;
  }
  return ranks;
}

CorrelationResult spearman(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw DegenerateInput("correlation: length mismatch");
  const auto rx = midrank(x);
  const auto ry = midrank(y);
  auto result = finish_correlation(CorrMethod::Spearman, raw_pearson(rx, ry));
  return result;
}

HolmResult holm_bonferroni(std::span<const double> p_values, double alpha) {
  const std::size_t m = p_values.size();
  if (!(alpha > 0.0 && alpha < 1.0)) throw DegenerateInput("holm: alpha must be in (0,1)");
  for (double p : p_values) {
    if (!(p >= 0.0 && p <= 1.0)) throw DegenerateInput("holm: p-values must be in [0,1]");
  }
  HolmResult out;
  out.p_adjusted.resize(m);
  out.reject.resize(m);
  if (m == 0) return out;

  std::vector<std::size_t> order(m);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return p_values[a] < p_values[b]; });

  double running_max = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    const double scaled = std::min(1.0, static_cast<double>(m - i) * p_values[order[i]]);
    running_max = std::max(running_max, scaled);
    out.p_adjusted[order[i]] = running_max;
  }
  for (std::size_t i = 0; i < m; ++i) out.reject[i] = out.p_adjusted[i] <= alpha;
  return out;
}

RegressionFit ols_hc3(const Eigen::MatrixXd& X, const Eigen::VectorXd& y) {
  const long n = X.rows();
  const long p = X.cols();
  if (y.size() != n) throw DegenerateInput("ols_hc3: response length mismatch");

  std::vector<bool> dropped(static_cast<std::size_t>(p), false);
  std::vector<long> kept;
  for (long j = 0; j < p; ++j) {
    if (X.col(j).cwiseAbs().maxCoeff() == 0.0) {
      dropped[static_cast<std::size_t>(j)] = true;
    } else {
      kept.push_back(j);
    }
  }
  const long k = static_cast<long>(kept.size()) + 1;  // + intercept
  if (n <= k) throw InsufficientData("ols_hc3: need more rows than parameters");

  Eigen::MatrixXd Z(n, k);
  Z.col(0).setOnes();
  for (std::size_t j = 0; j < kept.size(); ++j) Z.col(static_cast<long>(j) + 1) = X.col(kept[j]);

  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(Z);
  qr.setThreshold(1e-10);
  if (qr.rank() < k) throw RankDeficient("ols_hc3: design is rank deficient");

  const Eigen::VectorXd beta = qr.solve(y);
  const Eigen::VectorXd fitted = Z * beta;
  const Eigen::VectorXd resid = y - fitted;

  const Eigen::MatrixXd ztz_inv = (Z.transpose() * Z).ldlt().solve(Eigen::MatrixXd::Identity(k, k));
  // Leverages h_ii = z_i' (Z'Z)^-1 z_i
  const Eigen::VectorXd leverage = ((Z * ztz_inv).cwiseProduct(Z)).rowwise().sum();
  Eigen::VectorXd omega(n);
  for (long i = 0; i < n; ++i) {
    const double denom = 1.0 - leverage(i);
    const double d2 = denom * denom;
    omega(i) = d2 > 0.0 ? resid(i) * resid(i) / d2 : 0.0;
  }
  const Eigen::MatrixXd meat = Z.transpose() * omega.asDiagonal() * Z;
  const Eigen::MatrixXd cov = ztz_inv * meat * ztz_inv;

  const long df = n - k;
  const double t_crit = dist::t_quantile(0.975, static_cast<double>(df));

  RegressionFit fit;
  fit.n = static_cast<std::size_t>(n);
  fit.df_resid = df;
  fit.dropped = dropped;
  fit.coefficients.assign(static_cast<std::size_t>(p), kNan);
  fit.robust_se.assign(static_cast<std::size_t>(p), kNan);
  fit.t_stats.assign(static_cast<std::size_t>(p), kNan);
  fit.p_raw.assign(static_cast<std::size_t>(p), kNan);
  fit.p_adjusted.assign(static_cast<std::size_t>(p), kNan);
  fit.ci_low.assign(static_cast<std::size_t>(p), kNan);
  fit.ci_high.assign(static_cast<std::size_t>(p), kNan);

  auto fill = [&](long design_col, double& coef_out, double& se_out, double& t_out, double& p_out,
                  double* ci_lo, double* ci_hi) {
    const double coef = beta(design_col);
    const double var = cov(design_col, design_col);
    const double se = var > 0.0 ? std::sqrt(var) : 0.0;
    coef_out = coef;
    se_out = se;
    if (se > 0.0) {
      t_out = coef / se;
      p_out = dist::t_p_two_sided(t_out, static_cast<double>(df));
    } else {
      t_out = kNan;
      p_out = kNan;
    }
    if (ci_lo) *ci_lo = coef - t_crit * se;
    if (ci_hi) *ci_hi = coef + t_crit * se;
  };

  double ci_lo0, ci_hi0;
  fill(0, fit.intercept, fit.intercept_se, fit.intercept_t, fit.intercept_p, &ci_lo0, &ci_hi0);
  for (std::size_t j = 0; j < kept.size(); ++j) {
    const auto col = static_cast<std::size_t>(kept[j]);
    fill(static_cast<long>(j) + 1, fit.coefficients[col], fit.robust_se[col], fit.t_stats[col],
         fit.p_raw[col], &fit.ci_low[col], &fit.ci_high[col]);
  }

  fit.fitted.assign(fitted.data(), fitted.data() + n);
  fit.residuals.assign(resid.data(), resid.data() + n);
  const double sst = (y.array() - y.mean()).square().sum();
  const double sse = resid.squaredNorm();
  fit.r_squared = sst > 0.0 ? 1.0 - sse / sst : 0.0;
  return fit;
}

std::vector<double> vif(const Eigen::MatrixXd& X) {
  const long n = X.rows();
  const long p = X.cols();
  std::vector<double> out(static_cast<std::size_t>(p), kNan);
  for (long j = 0; j < p; ++j) {
    const Eigen::VectorXd target = X.col(j);
    const double sst = (target.array() - target.mean()).square().sum();
    if (sst <= 0.0) continue;  // constant column: VIF undefined
    Eigen::MatrixXd others(n, p);  // intercept + remaining predictors
    others.col(0).setOnes();
    long c = 1;
    for (long k = 0; k < p; ++k) {
      if (k != j) others.col(c++) = X.col(k);
    }
    others.conservativeResize(n, c);
    const Eigen::VectorXd beta = others.colPivHouseholderQr().solve(target);
    const double sse = (target - others * beta).squaredNorm();
    const double r2 = 1.0 - sse / sst;
    if (r2 >= 1.0 - 1e-12) {
      out[static_cast<std::size_t>(j)] = std::numeric_limits<double>::infinity();
    } else {
      out[static_cast<std::size_t>(j)] = 1.0 / (1.0 - r2);
    }
  }
  return out;
}

double durbin_watson(std::span<const double> residuals) {
  if (residuals.size() < 2) throw DegenerateInput("durbin_watson: need at least 2 residuals");
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < residuals.size(); ++i) {
    den += residuals[i] * residuals[i];
    if (i > 0) {
      const double d = residuals[i] - residuals[i - 1];
      num += d * d;
    }
  }
  if (den <= 0.0) throw DegenerateInput("durbin_watson: all residuals are zero");
  return num / den;
}

BreuschPagan breusch_pagan(const Eigen::MatrixXd& X, std::span<const double> residuals) {
  const long n = X.rows();
  if (static_cast<long>(residuals.size()) != n)
    throw DegenerateInput("breusch_pagan: residual length mismatch");
  Eigen::VectorXd e2(n);
  for (long i = 0; i < n; ++i) e2(i) = residuals[static_cast<std::size_t>(i)] * residuals[static_cast<std::size_t>(i)];

  BreuschPagan out;
  const double sst = (e2.array() - e2.mean()).square().sum();
  if (sst <= 0.0) {
    out.statistic = 0.0;
    out.p_value = 1.0;
    return out;
  }
  // Reuse the OLS machinery minus the robust part: plain R^2 of e^2 on X.
  std::vector<long> kept;
  for (long j = 0; j < X.cols(); ++j) {
    if (X.col(j).cwiseAbs().maxCoeff() != 0.0) kept.push_back(j);
  }
  Eigen::MatrixXd Z(n, static_cast<long>(kept.size()) + 1);
  Z.col(0).setOnes();
  for (std::size_t j = 0; j < kept.size(); ++j) Z.col(static_cast<long>(j) + 1) = X.col(kept[j]);
  const Eigen::VectorXd beta = Z.colPivHouseholderQr().solve(e2);
  const double sse = (e2 - Z * beta).squaredNorm();
  const double r2 = std::max(0.0, 1.0 - sse / sst);
  out.statistic = static_cast<double>(n) * r2;
  const double df = static_cast<double>(kept.size());
  out.p_value = df > 0 ? dist::chi2_sf(out.statistic, df) : 1.0;
  return out;
}

Eigen::MatrixXd flag_design(const std::vector<AnalysisTuple>& dataset) {
  Eigen::MatrixXd X(static_cast<long>(dataset.size()), kCriterionCount);
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    for (int f = 0; f < kCriterionCount; ++f) {
      X(static_cast<long>(i), f) = dataset[i].flags[static_cast<std::size_t>(f)] ? 1.0 : 0.0;
    }
  }
  return X;
}

namespace {

struct Stratum {
  std::string name;
  std::vector<const AnalysisTuple*> rows;
};

std::vector<Stratum> make_strata(const std::vector<AnalysisTuple>& dataset) {
  std::vector<Stratum> strata;
  strata.push_back({"all", {}});
  for (const auto& t : dataset) strata[0].rows.push_back(&t);
  for (Domain d : {Domain::LifeEarth, Domain::Physical, Domain::Math}) {
    Stratum s{itemgauge::to_string(d), {}};
    for (const auto& t : dataset) {
      if (t.domain && *t.domain == d) s.rows.push_back(&t);
    }
    if (!s.rows.empty()) strata.push_back(std::move(s));
  }
  return strata;
}

}  // namespace

Rq1Report rq1_analysis(const std::vector<AnalysisTuple>& dataset, double alpha) {
  if (dataset.empty()) throw DegenerateInput("rq1: empty dataset");
  Rq1Report report;
  report.alpha = alpha;

  const auto strata = make_strata(dataset);
  // Two families: discrimination and difficulty. Each spans all strata and
  // both correlation methods.
  for (const char* family : {"discrimination", "difficulty"}) {
    std::vector<std::size_t> family_cells;
    for (const auto& stratum : strata) {
      std::vector<double> counts, target;
      counts.reserve(stratum.rows.size());
      target.reserve(stratum.rows.size());
      for (const auto* row : stratum.rows) {
        counts.push_back(static_cast<double>(flag_count(row->flags)));
        target.push_back(std::string_view(family) == "discrimination" ? row->alpha : row->delta);
      }
      for (CorrMethod method : {CorrMethod::Pearson, CorrMethod::Spearman}) {
        Rq1Cell cell;
        cell.stratum = stratum.name;
        cell.family = family;
        if (stratum.rows.size() < 3) {
          cell.skipped = true;
          cell.note = "stratum has fewer than 3 items";
        } else {
          try {
            cell.result = method == CorrMethod::Pearson ? pearson(counts, target)
                                                        : spearman(counts, target);
            family_cells.push_back(report.cells.size());
          } catch (const DegenerateInput& e) {
            cell.skipped = true;
            cell.note = e.what();
          }
        }
        cell.result.method = method;
        report.cells.push_back(std::move(cell));
      }
    }
    std::vector<double> ps;
    ps.reserve(family_cells.size());
    for (std::size_t idx : family_cells) ps.push_back(report.cells[idx].result.p_raw);
    if (!ps.empty()) {
      const HolmResult adj = holm_bonferroni(ps, alpha);
      for (std::size_t i = 0; i < family_cells.size(); ++i) {
        report.cells[family_cells[i]].result.p_adjusted = adj.p_adjusted[i];
        report.cells[family_cells[i]].reject = adj.reject[i];
      }
    }
  }
  return report;
}

Rq2Report rq2_analysis(const std::vector<AnalysisTuple>& dataset, double alpha) {
  if (dataset.empty()) throw DegenerateInput("rq2: empty dataset");
  Rq2Report report;
  report.alpha = alpha;

  for (const auto& stratum : make_strata(dataset)) {
    Eigen::MatrixXd X(static_cast<long>(stratum.rows.size()), kCriterionCount);
    Eigen::VectorXd delta(static_cast<long>(stratum.rows.size()));
    Eigen::VectorXd alpha_v(static_cast<long>(stratum.rows.size()));
    for (std::size_t i = 0; i < stratum.rows.size(); ++i) {
      for (int f = 0; f < kCriterionCount; ++f) {
        X(static_cast<long>(i), f) = stratum.rows[i]->flags[static_cast<std::size_t>(f)] ? 1.0 : 0.0;
      }
      delta(static_cast<long>(i)) = stratum.rows[i]->delta;
      alpha_v(static_cast<long>(i)) = stratum.rows[i]->alpha;
    }

    for (const char* target : {"difficulty", "discrimination"}) {
      Rq2Cell cell;
      cell.stratum = stratum.name;
      cell.target = target;
      const Eigen::VectorXd& y = std::string_view(target) == "difficulty" ? delta : alpha_v;
      if (static_cast<long>(stratum.rows.size()) <= kCriterionCount + 2) {
        cell.skipped = true;
        cell.note = "stratum too small for 19-predictor regression";
        report.cells.push_back(std::move(cell));
        continue;
      }
      try {
        cell.fit = ols_hc3(X, y);
      } catch (const Error& e) {
        cell.skipped = true;
        cell.note = e.what();
        report.cells.push_back(std::move(cell));
        continue;
      }
      // Family: the defined coefficients within this cell.
      std::vector<double> ps;
      std::vector<std::size_t> defined;
      for (std::size_t j = 0; j < cell.fit.p_raw.size(); ++j) {
        if (!std::isnan(cell.fit.p_raw[j])) {
          ps.push_back(cell.fit.p_raw[j]);
          defined.push_back(j);
        }
      }
      cell.reject.assign(kCriterionCount, false);
      if (!ps.empty()) {
        const HolmResult adj = holm_bonferroni(ps, alpha);
        for (std::size_t i = 0; i < defined.size(); ++i) {
          cell.fit.p_adjusted[defined[i]] = adj.p_adjusted[i];
          cell.reject[defined[i]] = adj.reject[i];
        }
      }
      cell.diagnostics.vif = vif(X);
      try {
        cell.diagnostics.durbin_watson = durbin_watson(cell.fit.residuals);
      } catch (const DegenerateInput&) {
        cell.diagnostics.durbin_watson = kNan;
      }
      cell.diagnostics.breusch_pagan = breusch_pagan(X, cell.fit.residuals);
      report.cells.push_back(std::move(cell));
    }
  }
  return report;
}

}  // namespace itemgauge::stats
