#include "itemgauge/types.hpp"

#include <algorithm>
#include <cctype>

namespace itemgauge {

namespace {

std::string trim_copy(const std::string& s) {
  auto begin = s.find_first_not_of(" \t\r\n");
  if (begin == std::string::npos) return "";
  auto end = s.find_last_not_of(" \t\r\n");
  return s.substr(begin, end - begin + 1);
}

}  // namespace

std::string to_string(Domain d) {
  switch (d) {
    case Domain::LifeEarth: return "life_earth";
    case Domain::Physical: return "physical";
    case Domain::Math: return "math";
    case Domain::Other: return "other";
  }
  return "other";
}

std::optional<Domain> domain_from_string(std::string_view s) {
  if (s == "life_earth") return Domain::LifeEarth;
  if (s == "physical") return Domain::Physical;
  if (s == "math") return Domain::Math;
  if (s == "other") return Domain::Other;
  return std::nullopt;
}

const std::array<Criterion, kCriterionCount>& all_criteria() {
  static const std::array<Criterion, kCriterionCount> order = [] {
    std::array<Criterion, kCriterionCount> a{};
    for (int i = 0; i < kCriterionCount; ++i) a[i] = static_cast<Criterion>(i);
    return a;
  }();
  return order;
}

std::string to_string(Criterion c) {
  switch (c) {
    case Criterion::AmbiguousUnclear: return "ambiguous_unclear";
    case Criterion::ImplausibleDistractors: return "implausible_distractors";
    case Criterion::NoneOfTheAbove: return "none_of_the_above";
    case Criterion::LongestOptionCorrect: return "longest_option_correct";
    case Criterion::GratuitousInformation: return "gratuitous_information";
    case Criterion::TrueFalseQuestion: return "true_false_question";
    case Criterion::ConvergenceCues: return "convergence_cues";
    case Criterion::LogicalCues: return "logical_cues";
    case Criterion::AllOfTheAbove: return "all_of_the_above";
    case Criterion::FillInTheBlank: return "fill_in_the_blank";
    case Criterion::AbsoluteTerms: return "absolute_terms";
    case Criterion::WordRepeats: return "word_repeats";
    case Criterion::UnfocusedStem: return "unfocused_stem";
    case Criterion::ComplexKType: return "complex_k_type";
    case Criterion::GrammaticalCues: return "grammatical_cues";
    case Criterion::LostSequence: return "lost_sequence";
    case Criterion::VagueTerms: return "vague_terms";
    case Criterion::MoreThanOneCorrect: return "more_than_one_correct";
    case Criterion::NegativeWording: return "negative_wording";
  }
  return "unknown";
}

std::optional<Criterion> criterion_from_string(std::string_view s) {
  for (Criterion c : all_criteria()) {
    if (to_string(c) == s) return c;
  }
  return std::nullopt;
}

std::string to_string(DetectionTier t) {
  switch (t) {
    case DetectionTier::RuleBased: return "rule_based";
    case DetectionTier::Heuristic: return "heuristic";
    case DetectionTier::ExternalVerifier: return "external_verifier";
    case DetectionTier::VerifierUnavailable: return "verifier_unavailable";
  }
  return "heuristic";
}

std::optional<DetectionTier> tier_from_string(std::string_view s) {
  if (s == "rule_based") return DetectionTier::RuleBased;
  if (s == "heuristic") return DetectionTier::Heuristic;
  if (s == "external_verifier") return DetectionTier::ExternalVerifier;
  if (s == "verifier_unavailable") return DetectionTier::VerifierUnavailable;
  return std::nullopt;
}

std::string to_string(ItemFlag f) {
  switch (f) {
    case ItemFlag::LowDiscrimination: return "low_discrimination";
    case ItemFlag::LowDifficulty: return "low_difficulty";
    case ItemFlag::HighDifficulty: return "high_difficulty";
  }
  return "unknown";
}

std::optional<ItemFlag> item_flag_from_string(std::string_view s) {
  if (s == "low_discrimination") return ItemFlag::LowDiscrimination;
  if (s == "low_difficulty") return ItemFlag::LowDifficulty;
  if (s == "high_difficulty") return ItemFlag::HighDifficulty;
  return std::nullopt;
}

std::size_t ResponseMatrix::n_observed() const {
  std::size_t n = 0;
  for (const auto& row : rows) n += row.size();
  return n;
}

std::vector<long> ResponseMatrix::item_counts() const {
  std::vector<long> counts(item_ids.size(), 0);
  for (const auto& row : rows) {
    for (const auto& [item, outcome] : row) counts[static_cast<std::size_t>(item)]++;
  }
  return counts;
}

void ResponseMatrix::validate() const {
  if (rows.size() != student_ids.size())
    throw DegenerateInput("response matrix: row count does not match student count");
  for (std::size_t s = 0; s < rows.size(); ++s) {
    int prev_item = -1;
    for (const auto& [item, outcome] : rows[s]) {
      if (item < 0 || static_cast<std::size_t>(item) >= item_ids.size())
        throw DegenerateInput("response matrix: item index out of bounds");
      if (item <= prev_item)
        throw DegenerateInput("response matrix: duplicate or unsorted (student,item) entry");
      if (outcome != 0 && outcome != 1)
        throw DegenerateInput("response matrix: outcome must be 0 or 1");
      prev_item = item;
    }
  }
}

ValidationReport validate_bank(const std::vector<Mcq>& items) {
  ValidationReport report;
  for (const auto& item : items) {
    std::vector<std::string> problems;
    if (item.options.size() < 2) problems.push_back("fewer than 2 options");
    if (item.correct_index < 0 ||
        static_cast<std::size_t>(item.correct_index) >= item.options.size())
      problems.push_back("correct_index out of range");
    if (trim_copy(item.stem).empty()) problems.push_back("empty stem");
    for (std::size_t i = 0; i < item.options.size(); ++i) {
      if (trim_copy(item.options[i]).empty()) {
        problems.push_back("empty option at index " + std::to_string(i));
      }
    }
    std::set<std::string> seen;
    for (const auto& opt : item.options) {
      if (!seen.insert(opt).second) {
        problems.push_back("duplicate options");
        break;
      }
    }
    if (!problems.empty()) {
      auto& entry = report.errors[item.item_id];
      entry.insert(entry.end(), problems.begin(), problems.end());
    }
  }
  return report;
}

std::vector<AnalysisTuple> join_analysis_dataset(const std::vector<IrtItemParams>& params,
                                                 const std::vector<IwfAnnotation>& annotations) {
  return join_analysis_dataset(params, annotations, {});
}

std::vector<AnalysisTuple> join_analysis_dataset(const std::vector<IrtItemParams>& params,
                                                 const std::vector<IwfAnnotation>& annotations,
                                                 const std::map<std::string, Domain>& domains) {
  std::map<std::string, const IwfAnnotation*> by_id;
  for (const auto& ann : annotations) by_id.emplace(ann.item_id, &ann);

  std::vector<AnalysisTuple> out;
  for (const auto& p : params) {
    auto it = by_id.find(p.item_id);
    if (it == by_id.end()) continue;
    AnalysisTuple tuple;
    tuple.item_id = p.item_id;
    tuple.alpha = p.alpha;
    tuple.delta = p.delta;
    tuple.flags = it->second->flags;
    if (auto d = domains.find(p.item_id); d != domains.end()) tuple.domain = d->second;
    out.push_back(std::move(tuple));
  }
  std::sort(out.begin(), out.end(),
            [](const AnalysisTuple& a, const AnalysisTuple& b) { return a.item_id < b.item_id; });
  return out;
}

}  // namespace itemgauge
