#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace itemgauge {

inline constexpr std::string_view kVersion = "0.1.0";
inline constexpr int kCriterionCount = 19;

// ---------------------------------------------------------------------------
// Errors
// ---------------------------------------------------------------------------

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct DegenerateInput : Error {
  using Error::Error;
};
struct InsufficientData : Error {
  using Error::Error;
};
struct RankDeficient : Error {
  using Error::Error;
};
struct SingleClass : Error {
  using Error::Error;
};
struct PrecisionUnreachable : Error {
  using Error::Error;
};
// Screening task cannot be run at all (e.g. fewer positives than folds).
struct TaskInfeasible : Error {
  using Error::Error;
};
struct NonConvergence : Error {
  using Error::Error;
};
struct VerifierUnavailable : Error {
  using Error::Error;
};

struct ParseError : Error {
  ParseError(const std::string& what, std::string file, long line)
      : Error(what), file(std::move(file)), line(line) {}
  std::string file;
  long line = 0;
};

// ---------------------------------------------------------------------------
// Enums
// ---------------------------------------------------------------------------

enum class Domain { LifeEarth, Physical, Math, Other };

std::string to_string(Domain d);
std::optional<Domain> domain_from_string(std::string_view s);

// The 19 item-writing-flaw criteria in canonical order. Every 19-vector in
// the toolkit (annotation flags, prevalence, effect sizes, regression
// coefficients) is indexed by this order.
enum class Criterion : int {
  AmbiguousUnclear = 0,
  ImplausibleDistractors = 1,
  NoneOfTheAbove = 2,
  LongestOptionCorrect = 3,
  GratuitousInformation = 4,
  TrueFalseQuestion = 5,
  ConvergenceCues = 6,
  LogicalCues = 7,
  AllOfTheAbove = 8,
  FillInTheBlank = 9,
  AbsoluteTerms = 10,
  WordRepeats = 11,
  UnfocusedStem = 12,
  ComplexKType = 13,
  GrammaticalCues = 14,
  LostSequence = 15,
  VagueTerms = 16,
  MoreThanOneCorrect = 17,
  NegativeWording = 18,
};

const std::array<Criterion, kCriterionCount>& all_criteria();
std::string to_string(Criterion c);
std::optional<Criterion> criterion_from_string(std::string_view s);

enum class DetectionTier { RuleBased, Heuristic, ExternalVerifier, VerifierUnavailable };

std::string to_string(DetectionTier t);
std::optional<DetectionTier> tier_from_string(std::string_view s);

enum class ItemFlag { LowDiscrimination, LowDifficulty, HighDifficulty };

std::string to_string(ItemFlag f);
std::optional<ItemFlag> item_flag_from_string(std::string_view s);

using FlagVector = std::array<bool, kCriterionCount>;

inline int flag_count(const FlagVector& flags) {
  int n = 0;
  for (bool f : flags) n += f ? 1 : 0;
  return n;
}

// ---------------------------------------------------------------------------
// Domain types
// ---------------------------------------------------------------------------

struct Mcq {
  std::string item_id;
  std::string concept_id;
  Domain domain = Domain::Other;
  std::string stem;
  std::vector<std::string> options;
  int correct_index = 0;
};

struct ResponseRecord {
  std::string student_id;
  std::string item_id;
  int outcome = 0;  // 0 or 1
};

// Sparse binary student x item outcomes for one concept. rows[s] holds
// (item_index, outcome) pairs sorted by item index, at most one per item.
struct ResponseMatrix {
  std::string concept_id;
  std::vector<std::string> student_ids;
  std::vector<std::string> item_ids;
  std::vector<std::vector<std::pair<int, int>>> rows;

  std::size_t n_observed() const;
  std::vector<long> item_counts() const;
  // Throws DegenerateInput if indices are out of bounds, an outcome is not
  // 0/1, or a (student, item) pair appears twice.
  void validate() const;
};

struct IrtItemParams {
  std::string item_id;
  double alpha = 1.0;  // discrimination, > 0 after fitting
  double delta = 0.0;  // difficulty, logit scale
  long n_responses = 0;
  std::set<ItemFlag> flags;
};

struct StudentAbility {
  std::string student_id;
  double theta = 0.0;
};

struct IwfAnnotation {
  std::string item_id;
  FlagVector flags{};
  std::array<std::string, kCriterionCount> evidence{};
  std::array<DetectionTier, kCriterionCount> tiers{};

  int count() const { return flag_count(flags); }
};

// One row of the analysis dataset: IRT parameters joined with the flaw
// vector. The domain tag is optional; it is filled in when item metadata is
// available so analyses can stratify by subject area.
struct AnalysisTuple {
  std::string item_id;
  double alpha = 0.0;
  double delta = 0.0;
  FlagVector flags{};
  std::optional<Domain> domain;
};

// ---------------------------------------------------------------------------
// Operations
// ---------------------------------------------------------------------------

struct ValidationReport {
  // item_id -> list of violation messages
  std::map<std::string, std::vector<std::string>> errors;
  bool ok() const { return errors.empty(); }
};

// Checks every Mcq invariant; never mutates input. Empty report iff all
// items are well formed.
ValidationReport validate_bank(const std::vector<Mcq>& items);

// Inner join on item_id, output sorted by item_id. Preconditions: ids unique
// within each input.
std::vector<AnalysisTuple> join_analysis_dataset(const std::vector<IrtItemParams>& params,
                                                 const std::vector<IwfAnnotation>& annotations);
std::vector<AnalysisTuple> join_analysis_dataset(const std::vector<IrtItemParams>& params,
                                                 const std::vector<IwfAnnotation>& annotations,
                                                 const std::map<std::string, Domain>& domains);

}  // namespace itemgauge
