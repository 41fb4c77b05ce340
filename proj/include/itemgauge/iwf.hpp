#pragma once

#include <array>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "itemgauge/types.hpp"

namespace itemgauge::iwf {

struct VerifierConfig {
  bool enabled = false;
  std::string url;  // e.g. http://host:8080/verify
  std::string api_key;
  int timeout_seconds = 10;
  int max_retries = 1;
  int max_in_flight = 4;
};

struct DetectorConfig {
  std::set<std::string> absolute_terms = {"always", "never", "all",
                                          "none",   "only",  "every", "impossible"};
  std::set<std::string> vague_terms = {"frequently", "occasionally", "rarely", "sometimes",
                                       "often",      "usually",      "seldom"};
  std::set<std::string> negation_markers = {"not", "except", "never", "least", "false"};
  double longest_option_ratio = 1.5;
  int blank_marker_min_run = 3;
  int convergence_overlap_min = 2;
  VerifierConfig verifier;

  void validate() const;  // throws DegenerateInput
};

struct CriterionResult {
  Criterion criterion;
  bool flagged = false;
  std::string evidence;
  DetectionTier tier = DetectionTier::RuleBased;
};

// Tier a criterion is evaluated at when the external verifier is off.
DetectionTier default_tier(Criterion c);
bool is_rule_based(Criterion c);
bool needs_external_verifier(Criterion c);

// Plain-language definition of a criterion; sent to the external verifier
// alongside the item text.
std::string criterion_definition(Criterion c);

// Evaluates all 19 criteria. Pure and deterministic when the verifier is
// disabled. Verifier outages degrade the affected criterion to its offline
// heuristic with tier=verifier_unavailable; they never abort the item.
IwfAnnotation detect(const Mcq& item, const DetectorConfig& config);

struct BankSummary {
  std::size_t n_items = 0;
  long total_flags = 0;
  double mean_flags_per_item = 0.0;  // 0 for an empty bank
  std::array<double, kCriterionCount> prevalence{};
};

struct DetectBankResult {
  std::vector<IwfAnnotation> annotations;
  BankSummary summary;
};

// Annotates a bank; output is identical to sequential evaluation for any job
// count.
DetectBankResult detect_bank(const std::vector<Mcq>& items, const DetectorConfig& config,
                             int jobs = 1);

BankSummary summarize(const std::vector<IwfAnnotation>& annotations);

struct VerifierVerdict {
  bool flagged = false;
  std::string rationale;
};

// Single request per (item, criterion) with one retry; throws
// VerifierUnavailable on timeout / transport failure / malformed response.
VerifierVerdict verify_external(const Mcq& item, Criterion criterion,
                                const VerifierConfig& config);

}  // namespace itemgauge::iwf
