#include "itemgauge/irt.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace itemgauge::irt {

namespace {

double clamp(double x, double lo, double hi) { return std::min(std::max(x, lo), hi); }

struct QuadGrid {
  std::vector<double> nodes;
  std::vector<double> log_weights;  // standard-normal weights, renormalized
};

QuadGrid make_grid(const CalibrationConfig& config) {
  QuadGrid grid;
  const int q = config.quadrature_points;
  grid.nodes.resize(q);
  grid.log_weights.resize(q);
  std::vector<double> w(q);
  double total = 0.0;
  for (int i = 0; i < q; ++i) {
    const double x = q == 1 ? 0.5 * (config.quadrature_min + config.quadrature_max)
                            : config.quadrature_min + (config.quadrature_max - config.quadrature_min) *
                                                          static_cast<double>(i) / (q - 1);
    grid.nodes[i] = x;
    w[i] = std::exp(-0.5 * x * x);
    total += w[i];
  }
  for (int i = 0; i < q; ++i) grid.log_weights[i] = std::log(w[i] / total);
  return grid;
}

// Expected-count sufficient statistics for one item over the grid.
struct ItemCounts {
  std::vector<double> correct;  // r_q
  std::vector<double> total;    // n_q
};

double item_loglik(const ItemCounts& counts, const std::vector<double>& nodes, double alpha,
                   double delta) {
  double ll = 0.0;
  for (std::size_t q = 0; q < nodes.size(); ++q) {
    const double n = counts.total[q];
    if (n <= 0.0) continue;
    const double r = counts.correct[q];
    const double z = alpha * (nodes[q] - delta);
    // log sigma(z) = -log1p(exp(-z)) evaluated stably on both sides
    const double log_p = z >= 0 ? -std::log1p(std::exp(-z)) : z - std::log1p(std::exp(z));
    const double log_1mp = z >= 0 ? -z - std::log1p(std::exp(-z)) : -std::log1p(std::exp(z));
    ll += r * log_p + (n - r) * log_1mp;
  }
  return ll;
}

// Projected Newton ascent of the expected complete-data log-likelihood for a
// single item. Accepts a step only if it does not decrease the objective, so
// the enclosing EM stays monotone.
void mstep_item(const ItemCounts& counts, const std::vector<double>& nodes,
                const CalibrationConfig& config, double& alpha, double& delta) {
  double total_n = std::accumulate(counts.total.begin(), counts.total.end(), 0.0);
  if (total_n <= 0.0) return;
  double cur_ll = item_loglik(counts, nodes, alpha, delta);
  for (int iter = 0; iter < config.max_mstep_iterations; ++iter) {
    double g_a = 0.0, g_d = 0.0;
    double h_aa = 0.0, h_ad = 0.0, h_dd = 0.0;
    double sum_e = 0.0;
    for (std::size_t q = 0; q < nodes.size(); ++q) {
      const double n = counts.total[q];
      if (n <= 0.0) continue;
      const double r = counts.correct[q];
      const double u = nodes[q] - delta;
      const double p = irf(nodes[q], alpha, delta);
      const double e = r - n * p;
      const double v = n * p * (1.0 - p);
      g_a += e * u;
      sum_e += e;
      h_aa -= v * u * u;
      h_ad += alpha * v * u;
      h_dd -= alpha * alpha * v;
    }
    g_d = -alpha * sum_e;
    h_ad -= sum_e;

    const double grad_norm = std::max(std::fabs(g_a), std::fabs(g_d));
    if (grad_norm < 1e-8 * (1.0 + total_n)) break;

    // Newton direction; fall back to scaled gradient if the Hessian is not
    // safely negative definite.
    double da, dd;
    const double det = h_aa * h_dd - h_ad * h_ad;
    if (h_aa < 0.0 && det > 1e-12 * (1.0 + total_n)) {
      da = (-g_a * h_dd + g_d * h_ad) / det;
      dd = (-g_d * h_aa + g_a * h_ad) / det;
    } else {
      da = g_a / (total_n + 1.0);
      dd = g_d / (total_n + 1.0);
    }

    bool accepted = false;
    double step = 1.0;
    for (int bt = 0; bt < 20; ++bt) {
      const double cand_a = clamp(alpha + step * da, config.alpha_min, config.alpha_max);
      const double cand_d = clamp(delta + step * dd, config.delta_min, config.delta_max);
      const double cand_ll = item_loglik(counts, nodes, cand_a, cand_d);
      if (cand_ll >= cur_ll) {
        if (cand_a == alpha && cand_d == delta) break;  // pinned at bounds
        alpha = cand_a;
        delta = cand_d;
        cur_ll = cand_ll;
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) break;
  }
}

}  // namespace

void CalibrationConfig::validate() const {
  if (min_students_per_concept < 1 || min_responses_per_student < 1 || min_responses_per_item < 1)
    throw DegenerateInput("calibration config: counts must be >= 1");
  if (quadrature_points < 2) throw DegenerateInput("calibration config: quadrature_points must be >= 2");
  if (!(quadrature_min < quadrature_max))
    throw DegenerateInput("calibration config: degenerate quadrature range");
  if (!(alpha_min < alpha_max) || !(delta_min < delta_max))
    throw DegenerateInput("calibration config: degenerate parameter bounds");
  if (!(alpha_min > 0)) throw DegenerateInput("calibration config: alpha bounds must be positive");
  if (!(convergence_tol > 0)) throw DegenerateInput("calibration config: tol must be > 0");
  if (max_em_iterations < 1 || max_mstep_iterations < 1)
    throw DegenerateInput("calibration config: iteration caps must be >= 1");
}

void FlagThresholds::validate() const {
  if (!(low_diff_threshold < high_diff_threshold))
    throw DegenerateInput("flag thresholds: low_diff_threshold must be < high_diff_threshold");
}

double irf(double theta, double alpha, double delta) {
  return 1.0 / (1.0 + std::exp(-alpha * (theta - delta)));
}

FilterResult filter_eligible(const ResponseMatrix& matrix, const CalibrationConfig& config) {
  config.validate();
  const std::size_t n_students = matrix.student_ids.size();
  const std::size_t n_items = matrix.item_ids.size();
  std::vector<bool> student_alive(n_students, true);
  std::vector<bool> item_alive(n_items, true);
  ExclusionReport report;

  std::vector<long> student_counts(n_students, 0);
  std::vector<long> item_counts(n_items, 0);
  for (std::size_t s = 0; s < n_students; ++s) {
    student_counts[s] = static_cast<long>(matrix.rows[s].size());
    for (const auto& [item, outcome] : matrix.rows[s]) item_counts[static_cast<std::size_t>(item)]++;
  }

  bool changed = true;
  while (changed) {
    changed = false;
    for (std::size_t s = 0; s < n_students; ++s) {
      if (student_alive[s] && student_counts[s] < config.min_responses_per_student) {
        student_alive[s] = false;
        changed = true;
        report.entries.push_back({"student", matrix.student_ids[s], "below_min_responses_per_student"});
        for (const auto& [item, outcome] : matrix.rows[s]) {
          if (item_alive[static_cast<std::size_t>(item)]) item_counts[static_cast<std::size_t>(item)]--;
        }
      }
    }
    for (std::size_t i = 0; i < n_items; ++i) {
      if (item_alive[i] && item_counts[i] < config.min_responses_per_item) {
        item_alive[i] = false;
        changed = true;
        report.entries.push_back({"item", matrix.item_ids[i], "below_min_responses_per_item"});
      }
    }
    if (changed) {
      // Recompute student counts against surviving items.
      for (std::size_t s = 0; s < n_students; ++s) {
        if (!student_alive[s]) continue;
        long c = 0;
        for (const auto& [item, outcome] : matrix.rows[s]) {
          if (item_alive[static_cast<std::size_t>(item)]) ++c;
        }
        student_counts[s] = c;
      }
    }
  }

  long surviving_students = std::count(student_alive.begin(), student_alive.end(), true);
  if (surviving_students < config.min_students_per_concept) {
    report.entries.push_back({"concept", matrix.concept_id, "below_min_students_per_concept"});
    throw ConceptIneligible("concept " + matrix.concept_id + " has " +
                                std::to_string(surviving_students) + " students after filtering, needs " +
                                std::to_string(config.min_students_per_concept),
                            report);
  }

  FilterResult result;
  result.report = std::move(report);
  result.matrix.concept_id = matrix.concept_id;
  std::vector<int> item_map(n_items, -1);
  for (std::size_t i = 0; i < n_items; ++i) {
    if (item_alive[i]) {
      item_map[i] = static_cast<int>(result.matrix.item_ids.size());
      result.matrix.item_ids.push_back(matrix.item_ids[i]);
    }
  }
  for (std::size_t s = 0; s < n_students; ++s) {
    if (!student_alive[s]) continue;
    result.matrix.student_ids.push_back(matrix.student_ids[s]);
    std::vector<std::pair<int, int>> row;
    row.reserve(matrix.rows[s].size());
    for (const auto& [item, outcome] : matrix.rows[s]) {
      if (item_map[static_cast<std::size_t>(item)] >= 0)
        row.emplace_back(item_map[static_cast<std::size_t>(item)], outcome);
    }
    result.matrix.rows.push_back(std::move(row));
  }
  return result;
}

ConceptFit fit_concept(const ResponseMatrix& matrix, const CalibrationConfig& config) {
  config.validate();
  matrix.validate();
  if (matrix.n_observed() == 0) throw DegenerateInput("fit_concept: empty response matrix");

  ConceptFit fit;
  fit.concept_id = matrix.concept_id;

  // Degenerate items (all observed outcomes identical) have divergent MLEs;
  // exclude them up front.
  const std::size_t n_items_in = matrix.item_ids.size();
  std::vector<long> ones(n_items_in, 0), totals(n_items_in, 0);
  for (const auto& row : matrix.rows) {
    for (const auto& [item, outcome] : row) {
      totals[static_cast<std::size_t>(item)]++;
      ones[static_cast<std::size_t>(item)] += outcome;
    }
  }
  std::vector<int> item_map(n_items_in, -1);
  std::vector<std::string> item_ids;
  for (std::size_t i = 0; i < n_items_in; ++i) {
    if (totals[i] == 0 || ones[i] == 0 || ones[i] == totals[i]) {
      fit.exclusions.entries.push_back({"item", matrix.item_ids[i], "degenerate_item"});
    } else {
      item_map[i] = static_cast<int>(item_ids.size());
      item_ids.push_back(matrix.item_ids[i]);
    }
  }
  const std::size_t n_items = item_ids.size();
  if (n_items == 0) throw DegenerateInput("fit_concept: no fittable items (all degenerate)");

  const std::size_t n_students = matrix.student_ids.size();
  std::vector<std::vector<std::pair<int, int>>> rows(n_students);
  std::vector<long> n_responses(n_items, 0);
  for (std::size_t s = 0; s < n_students; ++s) {
    for (const auto& [item, outcome] : matrix.rows[s]) {
      const int mapped = item_map[static_cast<std::size_t>(item)];
      if (mapped >= 0) {
        rows[s].emplace_back(mapped, outcome);
        n_responses[static_cast<std::size_t>(mapped)]++;
      }
    }
  }

  const QuadGrid grid = make_grid(config);
  const std::size_t n_nodes = grid.nodes.size();

  std::vector<double> alpha(n_items, 1.0), delta(n_items, 0.0);
  std::vector<double> log_p(n_items * n_nodes), log_1mp(n_items * n_nodes);
  std::vector<ItemCounts> counts(n_items);
  for (auto& c : counts) {
    c.correct.assign(n_nodes, 0.0);
    c.total.assign(n_nodes, 0.0);
  }
  std::vector<double> posterior(n_nodes);
  std::vector<double> eap(n_students, 0.0);

  bool converged = false;
  int iterations = 0;

  auto run_e_step = [&](bool accumulate) {
    for (std::size_t i = 0; i < n_items; ++i) {
      for (std::size_t q = 0; q < n_nodes; ++q) {
        const double z = alpha[i] * (grid.nodes[q] - delta[i]);
        const double lp = z >= 0 ? -std::log1p(std::exp(-z)) : z - std::log1p(std::exp(z));
        const double l1 = z >= 0 ? -z - std::log1p(std::exp(-z)) : -std::log1p(std::exp(z));
        log_p[i * n_nodes + q] = lp;
        log_1mp[i * n_nodes + q] = l1;
      }
    }
    if (accumulate) {
      for (auto& c : counts) {
        std::fill(c.correct.begin(), c.correct.end(), 0.0);
        std::fill(c.total.begin(), c.total.end(), 0.0);
      }
    }
    double marginal_ll = 0.0;
    for (std::size_t s = 0; s < n_students; ++s) {
      double best = -std::numeric_limits<double>::infinity();
      for (std::size_t q = 0; q < n_nodes; ++q) {
        double lw = grid.log_weights[q];
        for (const auto& [item, outcome] : rows[s]) {
          lw += outcome ? log_p[static_cast<std::size_t>(item) * n_nodes + q]
                        : log_1mp[static_cast<std::size_t>(item) * n_nodes + q];
        }
        posterior[q] = lw;
        best = std::max(best, lw);
      }
      double denom = 0.0;
      for (std::size_t q = 0; q < n_nodes; ++q) {
        posterior[q] = std::exp(posterior[q] - best);
        denom += posterior[q];
      }
      marginal_ll += best + std::log(denom);
      double mean = 0.0;
      for (std::size_t q = 0; q < n_nodes; ++q) {
        posterior[q] /= denom;
        mean += posterior[q] * grid.nodes[q];
      }
      eap[s] = mean;
      if (accumulate) {
        for (const auto& [item, outcome] : rows[s]) {
          auto& c = counts[static_cast<std::size_t>(item)];
          for (std::size_t q = 0; q < n_nodes; ++q) {
            c.total[q] += posterior[q];
            if (outcome) c.correct[q] += posterior[q];
          }
        }
      }
    }
    return marginal_ll;
  };

  for (int em_iter = 0; em_iter < config.max_em_iterations; ++em_iter) {
    iterations = em_iter + 1;
    fit.ll_trace.push_back(run_e_step(true));
    double max_change = 0.0;
    for (std::size_t i = 0; i < n_items; ++i) {
      double a = alpha[i], d = delta[i];
      mstep_item(counts[i], grid.nodes, config, a, d);
      max_change = std::max(max_change, std::fabs(a - alpha[i]));
      max_change = std::max(max_change, std::fabs(d - delta[i]));
      alpha[i] = a;
      delta[i] = d;
    }
    if (max_change < config.convergence_tol) {
      converged = true;
      break;
    }
  }
  // Final pass: log-likelihood of the converged parameters and EAP abilities.
  fit.ll_trace.push_back(run_e_step(false));

  fit.log_likelihood = fit.ll_trace.back();
  fit.n_iterations = iterations;
  fit.converged = converged;
  fit.item_params.reserve(n_items);
  for (std::size_t i = 0; i < n_items; ++i) {
    IrtItemParams p;
    p.item_id = item_ids[i];
    p.alpha = alpha[i];
    p.delta = delta[i];
    p.n_responses = n_responses[i];
    fit.item_params.push_back(std::move(p));
  }
  fit.abilities.reserve(n_students);
  for (std::size_t s = 0; s < n_students; ++s) {
    fit.abilities.push_back({matrix.student_ids[s], eap[s]});
  }
  return fit;
}

std::map<ItemFlag, long> flag_items(std::vector<IrtItemParams>& params,
                                    const FlagThresholds& thresholds) {
  thresholds.validate();
  std::map<ItemFlag, long> counts{{ItemFlag::LowDiscrimination, 0},
                                  {ItemFlag::LowDifficulty, 0},
                                  {ItemFlag::HighDifficulty, 0}};
  for (auto& p : params) {
    p.flags.clear();
    if (p.alpha < thresholds.disc_threshold) {
      p.flags.insert(ItemFlag::LowDiscrimination);
      counts[ItemFlag::LowDiscrimination]++;
    }
    if (p.delta < thresholds.low_diff_threshold) {
      p.flags.insert(ItemFlag::LowDifficulty);
      counts[ItemFlag::LowDifficulty]++;
    }
    if (p.delta > thresholds.high_diff_threshold) {
      p.flags.insert(ItemFlag::HighDifficulty);
      counts[ItemFlag::HighDifficulty]++;
    }
  }
  return counts;
}

}  // namespace itemgauge::irt
