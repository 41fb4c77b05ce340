#pragma once

#include <map>
#include <string>
#include <vector>

#include "itemgauge/types.hpp"

namespace itemgauge::irt {

struct CalibrationConfig {
  int min_students_per_concept = 500;
  int min_responses_per_student = 5;
  int min_responses_per_item = 500;
  int quadrature_points = 61;
  double quadrature_min = -6.0;
  double quadrature_max = 6.0;
  double alpha_min = 0.05;
  double alpha_max = 5.0;
  double delta_min = -6.0;
  double delta_max = 6.0;
  double convergence_tol = 1e-4;
  int max_em_iterations = 500;
  int max_mstep_iterations = 25;

  void validate() const;  // throws DegenerateInput on a bad config
};

struct FlagThresholds {
  double disc_threshold = 0.5;
  double low_diff_threshold = -2.0;
  double high_diff_threshold = 2.0;

  void validate() const;
};

struct Exclusion {
  std::string entity;  // "student" | "item" | "concept"
  std::string id;
  std::string reason;
};

struct ExclusionReport {
  std::vector<Exclusion> entries;
  bool empty() const { return entries.empty(); }
};

// Thrown when the filtered matrix fails the concept-level student threshold;
// carries the full exclusion trail so callers can still report it.
struct ConceptIneligible : Error {
  ConceptIneligible(const std::string& what, ExclusionReport r)
      : Error(what), report(std::move(r)) {}
  ExclusionReport report;
};

struct ConceptFit {
  std::string concept_id;
  std::vector<IrtItemParams> item_params;
  std::vector<StudentAbility> abilities;
  double log_likelihood = 0.0;
  int n_iterations = 0;
  bool converged = false;
  // Marginal log-likelihood after each EM iteration; non-decreasing.
  std::vector<double> ll_trace;
  // Degenerate items removed before fitting.
  ExclusionReport exclusions;
};

// Two-parameter logistic item response function.
double irf(double theta, double alpha, double delta);

struct FilterResult {
  ResponseMatrix matrix;
  ExclusionReport report;
};

// Iteratively removes students below min_responses_per_student and items
// below min_responses_per_item until a fixed point. Throws ConceptIneligible
// if the surviving student count is below min_students_per_concept.
FilterResult filter_eligible(const ResponseMatrix& matrix, const CalibrationConfig& config);

// Marginal-maximum-likelihood EM fit over a standard-normal ability prior on
// a fixed quadrature grid. Abilities are expected-a-posteriori estimates.
// Deterministic for identical inputs and config.
ConceptFit fit_concept(const ResponseMatrix& matrix, const CalibrationConfig& config);

// Populates threshold flags in place (strict comparisons) and returns the
// per-flag counts.
std::map<ItemFlag, long> flag_items(std::vector<IrtItemParams>& params,
                                    const FlagThresholds& thresholds);

}  // namespace itemgauge::irt
