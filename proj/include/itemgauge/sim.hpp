#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "itemgauge/types.hpp"

namespace itemgauge::sim {

struct InteractionEffect {
  Criterion first = Criterion::AmbiguousUnclear;
  Criterion second = Criterion::AmbiguousUnclear;
  double on_delta = 0.0;
  double on_alpha = 0.0;
};

std::array<double, kCriterionCount> default_flaw_prevalence();
std::array<double, kCriterionCount> default_effect_on_delta();
std::array<double, kCriterionCount> default_effect_on_alpha();

struct SimConfig {
  int n_concepts = 10;
  int items_per_concept = 13;
  int students_per_concept = 1800;
  double response_rate = 0.85;
  // Base discrimination is log-normal, base difficulty normal; abilities are
  // standard normal.
  double alpha_base_log_mean = 0.0;
  double alpha_base_log_sd = 0.3;
  double delta_base_mean = 0.0;
  double delta_base_sd = 1.0;
  std::array<double, kCriterionCount> flaw_prevalence = default_flaw_prevalence();
  std::array<double, kCriterionCount> effect_on_delta = default_effect_on_delta();
  std::array<double, kCriterionCount> effect_on_alpha = default_effect_on_alpha();
  std::vector<InteractionEffect> interactions;
  bool emit_text = true;  // realize flagged flaws in templated item text
  std::uint64_t seed = 0;

  void validate() const;  // throws DegenerateInput
};

struct TrueItem {
  std::string item_id;
  std::string concept_id;
  double alpha = 1.0;
  double delta = 0.0;
  FlagVector flags{};
};

struct TrueStudent {
  std::string student_id;
  std::string concept_id;
  double theta = 0.0;
};

struct GroundTruth {
  std::vector<TrueItem> items;
  std::vector<TrueStudent> students;
};

struct Bank {
  std::vector<Mcq> items;
  GroundTruth truth;
};

// Draws flaw vectors, true item parameters (base draw plus additive flaw
// effects and optional pairwise interactions) and student abilities.
// Deterministic per seed. When emit_text is set, each item's text is
// templated so that flagged flaws are realizable by the detector.
Bank generate_bank(const SimConfig& config);

// Bernoulli response simulation through the item response function; each
// eligible (student, item) pair is retained with probability response_rate.
std::vector<ResponseMatrix> simulate_responses(const GroundTruth& truth, const SimConfig& config);

}  // namespace itemgauge::sim
