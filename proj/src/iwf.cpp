#include "itemgauge/iwf.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <map>
#include <sstream>

#include "itemgauge/parallel.hpp"
#include "itemgauge/text.hpp"

namespace itemgauge::iwf {

namespace {

using text::contains_whole_word;
using text::content_tokens;
using text::normalize;
using text::tokenize;

struct ItemView {
  const Mcq* item;
  std::string stem_norm;
  std::vector<std::string> option_norm;
  std::vector<std::string> stem_tokens;
  std::set<std::string> stem_content;
  std::vector<std::set<std::string>> option_content;

  explicit ItemView(const Mcq& mcq) : item(&mcq) {
    stem_norm = normalize(mcq.stem);
    stem_tokens = tokenize(mcq.stem);
    for (const auto& t : content_tokens(mcq.stem)) stem_content.insert(t);
    option_norm.reserve(mcq.options.size());
    option_content.reserve(mcq.options.size());
    for (const auto& opt : mcq.options) {
      option_norm.push_back(normalize(opt));
      std::set<std::string> content;
      for (const auto& t : content_tokens(opt)) content.insert(t);
      option_content.push_back(std::move(content));
    }
  }

  std::size_t n_options() const { return option_norm.size(); }
  std::size_t correct() const { return static_cast<std::size_t>(item->correct_index); }
  bool is_correct(std::size_t i) const { return i == correct(); }
};

std::string option_label(std::size_t i) { return "option " + std::to_string(i + 1); }

// Bigrams over the raw token sequence where both tokens are content words.
std::set<std::pair<std::string, std::string>> content_bigrams(const std::vector<std::string>& tokens) {
  std::set<std::pair<std::string, std::string>> out;
  for (std::size_t i = 0; i + 1 < tokens.size(); ++i) {
    if (!text::is_stopword(tokens[i]) && !text::is_stopword(tokens[i + 1])) {
      out.emplace(tokens[i], tokens[i + 1]);
    }
  }
  return out;
}

// --- rule-based criteria -------------------------------------------------

CriterionResult rule_none_of_the_above(const ItemView& v) {
  CriterionResult r{Criterion::NoneOfTheAbove, false, "", DetectionTier::RuleBased};
  static const std::vector<std::string> phrases = {"none of the above", "not any of the above",
                                                   "none of these"};
  for (std::size_t i = 0; i < v.n_options(); ++i) {
    for (const auto& phrase : phrases) {
      if (v.option_norm[i].find(phrase) != std::string::npos) {
        r.flagged = true;
        r.evidence = option_label(i) + " matches \"" + phrase + "\"";
        return r;
      }
    }
  }
  return r;
}

CriterionResult rule_all_of_the_above(const ItemView& v) {
  CriterionResult r{Criterion::AllOfTheAbove, false, "", DetectionTier::RuleBased};
  static const std::vector<std::string> phrases = {"all of the above", "all of these"};
  for (std::size_t i = 0; i < v.n_options(); ++i) {
    for (const auto& phrase : phrases) {
      if (v.option_norm[i].find(phrase) != std::string::npos) {
        r.flagged = true;
        r.evidence = option_label(i) + " matches \"" + phrase + "\"";
        return r;
      }
    }
  }
  return r;
}

CriterionResult rule_longest_option_correct(const ItemView& v, const DetectorConfig& config) {
  CriterionResult r{Criterion::LongestOptionCorrect, false, "", DetectionTier::RuleBased};
  const std::size_t correct = v.correct();
  std::size_t max_distractor = 0;
  for (std::size_t i = 0; i < v.n_options(); ++i) {
    if (i != correct) max_distractor = std::max(max_distractor, v.option_norm[i].size());
  }
  if (max_distractor == 0) return r;
  const double len = static_cast<double>(v.option_norm[correct].size());
  if (len >= config.longest_option_ratio * static_cast<double>(max_distractor)) {
    std::ostringstream os;
    os << "correct option length " << v.option_norm[correct].size() << " >= "
       << config.longest_option_ratio << "x longest distractor length " << max_distractor;
    r.flagged = true;
    r.evidence = os.str();
  }
  return r;
}

CriterionResult rule_true_false(const ItemView& v) {
  CriterionResult r{Criterion::TrueFalseQuestion, false, "", DetectionTier::RuleBased};
  std::size_t tf = 0;
  for (std::size_t i = 0; i < v.n_options(); ++i) {
    const auto tokens = tokenize(v.option_norm[i]);
    if (!tokens.empty() && (tokens.front() == "true" || tokens.front() == "false" ||
                            tokens.front() == "t" || tokens.front() == "f")) {
      ++tf;
    }
  }
  if (2 * tf >= v.n_options() && tf > 0) {
    r.flagged = true;
    r.evidence = std::to_string(tf) + " of " + std::to_string(v.n_options()) +
                 " options are true/false statements";
  }
  return r;
}

CriterionResult rule_fill_in_the_blank(const ItemView& v, const DetectorConfig& config) {
  CriterionResult r{Criterion::FillInTheBlank, false, "", DetectionTier::RuleBased};
  const std::string& stem = v.item->stem;
  std::size_t i = 0;
  while (i < stem.size()) {
    if (stem[i] != '_') {
      ++i;
      continue;
    }
    std::size_t run = 0;
    while (i + run < stem.size() && stem[i + run] == '_') ++run;
    if (run >= static_cast<std::size_t>(config.blank_marker_min_run)) {
      // The blank counts only when the sentence continues after it.
      std::size_t after = i + run;
      while (after < stem.size() && std::isspace(static_cast<unsigned char>(stem[after]))) ++after;
      if (after < stem.size() && stem[after] != '.' && stem[after] != '!' && stem[after] != '?') {
        r.flagged = true;
        r.evidence = "blank of " + std::to_string(run) + " underscores mid-sentence";
        return r;
      }
    }
    i += run;
  }
  return r;
}

CriterionResult rule_lexicon_in_options(const ItemView& v, const std::set<std::string>& lexicon,
                                        Criterion criterion) {
  CriterionResult r{criterion, false, "", DetectionTier::RuleBased};
  // Canonical all/none-of-the-above phrasings are governed by their own
  // criteria; a lexicon hit inside one of those spans is not an independent
  // use of the term.
  static const std::vector<std::string> governed = {
      "all of the above", "all of these", "none of the above", "none of these",
      "not any of the above"};
  for (std::size_t i = 0; i < v.n_options(); ++i) {
    std::string scope = v.option_norm[i];
    for (const auto& phrase : governed) {
      std::size_t pos;
      while ((pos = scope.find(phrase)) != std::string::npos) scope.erase(pos, phrase.size());
    }
    for (const auto& term : lexicon) {
      if (contains_whole_word(scope, term)) {
        r.flagged = true;
        r.evidence = option_label(i) + " contains \"" + term + "\"";
        return r;
      }
    }
  }
  return r;
}

CriterionResult rule_lost_sequence(const ItemView& v) {
  CriterionResult r{Criterion::LostSequence, false, "", DetectionTier::RuleBased};
  if (v.n_options() < 2) return r;
  std::vector<double> values(v.n_options());
  for (std::size_t i = 0; i < v.n_options(); ++i) {
    if (!text::parse_sequence_value(v.option_norm[i], &values[i])) return r;
  }
  const bool ascending = std::is_sorted(values.begin(), values.end());
  const bool descending = std::is_sorted(values.rbegin(), values.rend());
  if (!ascending && !descending) {
    r.flagged = true;
    r.evidence = "numeric/date options are in neither ascending nor descending order";
  }
  return r;
}

CriterionResult rule_negative_wording(const ItemView& v, const DetectorConfig& config) {
  CriterionResult r{Criterion::NegativeWording, false, "", DetectionTier::RuleBased};
  // Capitalized NOT / EXCEPT flag unconditionally, quotes included.
  for (const char* marker : {"NOT", "EXCEPT"}) {
    std::size_t pos = 0;
    const std::string_view stem = v.item->stem;
    const std::string_view needle = marker;
    while ((pos = stem.find(needle, pos)) != std::string_view::npos) {
      const bool left_ok = pos == 0 || !std::isalnum(static_cast<unsigned char>(stem[pos - 1]));
      const std::size_t end = pos + needle.size();
      const bool right_ok =
          end >= stem.size() || !std::isalnum(static_cast<unsigned char>(stem[end]));
      if (left_ok && right_ok) {
        r.flagged = true;
        r.evidence = std::string("stem contains capitalized \"") + marker + "\"";
        return r;
      }
      pos += 1;
    }
  }
  const std::string unquoted = normalize(text::strip_quoted(v.item->stem));
  for (const auto& term : config.negation_markers) {
    if (contains_whole_word(unquoted, term)) {
      r.flagged = true;
      r.evidence = "stem contains \"" + term + "\" outside quoted text";
      return r;
    }
  }
  return r;
}

// --- heuristic criteria ---------------------------------------------------

CriterionResult heur_implausible_distractors(const ItemView& v) {
  CriterionResult r{Criterion::ImplausibleDistractors, false, "", DetectionTier::Heuristic};
  std::vector<std::size_t> lengths;
  lengths.reserve(v.n_options());
  for (const auto& opt : v.option_norm) lengths.push_back(opt.size());
  std::sort(lengths.begin(), lengths.end());
  const double median = lengths.size() % 2 == 1
                            ? static_cast<double>(lengths[lengths.size() / 2])
                            : 0.5 * static_cast<double>(lengths[lengths.size() / 2 - 1] +
                                                        lengths[lengths.size() / 2]);
  for (std::size_t i = 0; i < v.n_options(); ++i) {
    if (v.is_correct(i)) continue;
    bool shares = false;
    for (const auto& tok : v.option_content[i]) {
      if (v.stem_content.count(tok)) {
        shares = true;
        break;
      }
    }
    if (!shares && static_cast<double>(v.option_norm[i].size()) < 0.4 * median) {
      r.flagged = true;
      r.evidence = option_label(i) + " shares no stem content words and is short (" +
                   std::to_string(v.option_norm[i].size()) + " vs median " +
                   std::to_string(static_cast<long>(median)) + " chars)";
      return r;
    }
  }
  return r;
}

CriterionResult heur_logical_cues(const ItemView& v) {
  CriterionResult r{Criterion::LogicalCues, false, "", DetectionTier::Heuristic};
  const auto stem_bi = content_bigrams(v.stem_tokens);
  if (stem_bi.empty()) return r;
  const auto correct_bi = content_bigrams(tokenize(v.option_norm[v.correct()]));
  for (const auto& bigram : correct_bi) {
    if (!stem_bi.count(bigram)) continue;
    bool in_distractor = false;
    for (std::size_t i = 0; i < v.n_options() && !in_distractor; ++i) {
      if (v.is_correct(i)) continue;
      in_distractor = content_bigrams(tokenize(v.option_norm[i])).count(bigram) > 0;
    }
    if (!in_distractor) {
      r.flagged = true;
      r.evidence = "correct option repeats stem phrase \"" + bigram.first + " " + bigram.second +
                   "\" that no distractor repeats";
      return r;
    }
  }
  return r;
}

CriterionResult heur_word_repeats(const ItemView& v) {
  CriterionResult r{Criterion::WordRepeats, false, "", DetectionTier::Heuristic};
  for (const auto& word : v.stem_content) {
    if (!v.option_content[v.correct()].count(word)) continue;
    bool in_distractor = false;
    for (std::size_t i = 0; i < v.n_options() && !in_distractor; ++i) {
      if (v.is_correct(i)) continue;
      in_distractor = v.option_content[i].count(word) > 0;
    }
    if (!in_distractor) {
      r.flagged = true;
      r.evidence = "stem word \"" + word + "\" appears only in the correct option";
      return r;
    }
  }
  return r;
}

bool starts_with_vowel_letter(const std::string& normalized_option) {
  for (char c : normalized_option) {
    if (std::isalpha(static_cast<unsigned char>(c))) {
      return c == 'a' || c == 'e' || c == 'i' || c == 'o' || c == 'u';
    }
    if (!std::isspace(static_cast<unsigned char>(c))) return false;
  }
  return false;
}

bool looks_plural(const std::string& normalized_option) {
  const auto tokens = tokenize(normalized_option);
  if (tokens.empty()) return false;
  const std::string& head = tokens.front();
  return head.size() > 2 && head.back() == 's' && head[head.size() - 2] != 's';
}

CriterionResult heur_grammatical_cues(const ItemView& v) {
  CriterionResult r{Criterion::GrammaticalCues, false, "", DetectionTier::Heuristic};
  std::vector<std::string> stem_tokens = v.stem_tokens;
  if (stem_tokens.empty()) return r;
  const std::string& last = stem_tokens.back();

  if (last == "a" || last == "an") {
    const bool want_vowel = last == "an";
    std::size_t agreeing = 0, which = 0;
    for (std::size_t i = 0; i < v.n_options(); ++i) {
      if (starts_with_vowel_letter(v.option_norm[i]) == want_vowel) {
        ++agreeing;
        which = i;
      }
    }
    if (agreeing == 1) {
      r.flagged = true;
      r.evidence = "stem ends with \"" + last + "\" and only " + option_label(which) +
                   " agrees with the article";
      return r;
    }
  }

  if (last == "is" || last == "was" || last == "are" || last == "were") {
    const bool want_plural = last == "are" || last == "were";
    const bool correct_agrees = looks_plural(v.option_norm[v.correct()]) == want_plural;
    if (correct_agrees) {
      bool any_distractor_agrees = false;
      for (std::size_t i = 0; i < v.n_options(); ++i) {
        if (v.is_correct(i)) continue;
        if (looks_plural(v.option_norm[i]) == want_plural) {
          any_distractor_agrees = true;
          break;
        }
      }
      if (!any_distractor_agrees) {
        r.flagged = true;
        r.evidence = "only the correct option agrees in number with stem verb \"" + last + "\"";
        return r;
      }
    }
  }
  return r;
}

// --- offline heuristics for verifier-tier criteria -------------------------

CriterionResult heur_ambiguous_unclear(const ItemView& v) {
  CriterionResult r{Criterion::AmbiguousUnclear, false, "", DetectionTier::Heuristic};
  if (v.stem_tokens.size() > 60) {
    r.flagged = true;
    r.evidence = "stem has " + std::to_string(v.stem_tokens.size()) + " tokens (> 60)";
    return r;
  }
  if (!v.stem_tokens.empty()) {
    const std::string& first = v.stem_tokens.front();
    if (first == "it" || first == "they" || first == "this") {
      r.flagged = true;
      r.evidence = "stem opens with unresolved pronoun \"" + first + "\"";
    }
  }
  return r;
}

CriterionResult heur_gratuitous_information(const ItemView& v) {
  CriterionResult r{Criterion::GratuitousInformation, false, "", DetectionTier::Heuristic};
  const auto sentences = text::split_sentences(v.item->stem);
  if (sentences.size() < 3) return r;
  std::set<std::string> first_content;
  for (const auto& tok : content_tokens(sentences.front())) first_content.insert(tok);
  if (first_content.empty()) return r;
  for (const auto& opts : v.option_content) {
    for (const auto& tok : opts) {
      if (first_content.count(tok)) return r;
    }
  }
  r.flagged = true;
  r.evidence = "first of " + std::to_string(sentences.size()) +
               " sentences shares no content words with any option";
  return r;
}

CriterionResult heur_convergence_cues(const ItemView& v, const DetectorConfig& config) {
  CriterionResult r{Criterion::ConvergenceCues, false, "", DetectionTier::Heuristic};
  std::map<std::string, int> option_counts;
  for (const auto& content : v.option_content) {
    for (const auto& tok : content) option_counts[tok]++;
  }
  int best_with_correct = 0;
  std::string best_word;
  int best_distractor_only = 0;
  for (const auto& [word, count] : option_counts) {
    if (count < 2) continue;
    if (v.option_content[v.correct()].count(word)) {
      if (count > best_with_correct) {
        best_with_correct = count;
        best_word = word;
      }
    } else {
      best_distractor_only = std::max(best_distractor_only, count);
    }
  }
  if (best_with_correct >= config.convergence_overlap_min &&
      best_with_correct > best_distractor_only) {
    r.flagged = true;
    r.evidence = "word \"" + best_word + "\" converges on the correct option (appears in " +
                 std::to_string(best_with_correct) + " options)";
  }
  return r;
}

CriterionResult heur_unfocused_stem(const ItemView& v) {
  CriterionResult r{Criterion::UnfocusedStem, false, "", DetectionTier::Heuristic};
  std::string stem = v.item->stem;
  // Strip blanks before judging the stem text itself.
  std::string no_blanks;
  for (char c : stem) {
    if (c != '_') no_blanks.push_back(c);
  }
  static const std::set<std::string> interrogatives{"who",  "what",  "when", "where", "why",
                                                    "which", "how",  "whom", "whose"};
  static const std::set<std::string> verb_markers{
      "is",    "are",   "was",    "were",  "be",     "been",   "being",  "am",     "do",
      "does",  "did",   "has",    "have",  "had",    "can",    "could",  "will",   "would",
      "shall", "should", "may",   "might", "must",   "describes", "defines", "identify",
      "identifies", "select", "choose", "name", "names", "explains", "explain", "occurs",
      "occur", "happens", "happen", "causes", "cause", "makes", "make", "represents",
      "represent", "means", "mean", "shows", "show", "contains", "contain", "uses", "use"};
  for (const auto& tok : tokenize(no_blanks)) {
    if (interrogatives.count(tok) || verb_markers.count(tok)) return r;
  }
  if (v.item->stem.find('?') != std::string::npos) return r;
  r.flagged = true;
  r.evidence = "stem contains no interrogative word and no recognizable verb";
  return r;
}

bool is_combo_option(const std::string& normalized_option) {
  auto tokens = tokenize(normalized_option);
  if (!tokens.empty() && tokens.front() == "both") tokens.erase(tokens.begin());
  if (tokens.size() < 3 || tokens.size() % 2 == 0) return false;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (i % 2 == 0) {
      // operand: single letter a-e or single digit
      const std::string& t = tokens[i];
      const bool letter = t.size() == 1 && t[0] >= 'a' && t[0] <= 'e';
      const bool digit = t.size() == 1 && std::isdigit(static_cast<unsigned char>(t[0]));
      if (!letter && !digit) return false;
    } else if (tokens[i] != "and" && tokens[i] != "or") {
      return false;
    }
  }
  return true;
}

CriterionResult heur_complex_k_type(const ItemView& v) {
  CriterionResult r{Criterion::ComplexKType, false, "", DetectionTier::Heuristic};
  std::size_t combos = 0;
  for (const auto& opt : v.option_norm) {
    if (is_combo_option(opt)) ++combos;
  }
  if (combos >= 2) {
    r.flagged = true;
    r.evidence = std::to_string(combos) + " options are answer-combination patterns";
  }
  return r;
}

CriterionResult heur_more_than_one_correct(const ItemView& v) {
  CriterionResult r{Criterion::MoreThanOneCorrect, false, "", DetectionTier::Heuristic};
  for (std::size_t i = 0; i < v.n_options(); ++i) {
    for (std::size_t j = i + 1; j < v.n_options(); ++j) {
      const auto& a = v.option_norm[i];
      const auto& b = v.option_norm[j];
      if (a == b) {
        r.flagged = true;
        r.evidence = option_label(i) + " and " + option_label(j) + " are identical";
        return r;
      }
      if (!a.empty() && !b.empty()) {
        if (a.size() < b.size() && b.find(a) != std::string::npos) {
          r.flagged = true;
          r.evidence = option_label(i) + " is contained in " + option_label(j);
          return r;
        }
        if (b.size() < a.size() && a.find(b) != std::string::npos) {
          r.flagged = true;
          r.evidence = option_label(j) + " is contained in " + option_label(i);
          return r;
        }
      }
    }
  }
  return r;
}

CriterionResult offline_result(const ItemView& v, Criterion c, const DetectorConfig& config) {
  switch (c) {
    case Criterion::AmbiguousUnclear: return heur_ambiguous_unclear(v);
    case Criterion::ImplausibleDistractors: return heur_implausible_distractors(v);
    case Criterion::NoneOfTheAbove: return rule_none_of_the_above(v);
    case Criterion::LongestOptionCorrect: return rule_longest_option_correct(v, config);
    case Criterion::GratuitousInformation: return heur_gratuitous_information(v);
    case Criterion::TrueFalseQuestion: return rule_true_false(v);
    case Criterion::ConvergenceCues: return heur_convergence_cues(v, config);
    case Criterion::LogicalCues: return heur_logical_cues(v);
    case Criterion::AllOfTheAbove: return rule_all_of_the_above(v);
    case Criterion::FillInTheBlank: return rule_fill_in_the_blank(v, config);
    case Criterion::AbsoluteTerms:
      return rule_lexicon_in_options(v, config.absolute_terms, Criterion::AbsoluteTerms);
    case Criterion::WordRepeats: return heur_word_repeats(v);
    case Criterion::UnfocusedStem: return heur_unfocused_stem(v);
    case Criterion::ComplexKType: return heur_complex_k_type(v);
    case Criterion::GrammaticalCues: return heur_grammatical_cues(v);
    case Criterion::LostSequence: return rule_lost_sequence(v);
    case Criterion::VagueTerms:
      return rule_lexicon_in_options(v, config.vague_terms, Criterion::VagueTerms);
    case Criterion::MoreThanOneCorrect: return heur_more_than_one_correct(v);
    case Criterion::NegativeWording: return rule_negative_wording(v, config);
  }
  throw Error("unknown criterion");
}

}  // namespace

void DetectorConfig::validate() const {
  if (absolute_terms.empty() || vague_terms.empty() || negation_markers.empty())
    throw DegenerateInput("detector config: lexicons must be non-empty");
  if (!(longest_option_ratio > 1.0))
    throw DegenerateInput("detector config: longest_option_ratio must be > 1");
  if (blank_marker_min_run < 1)
    throw DegenerateInput("detector config: blank_marker_min_run must be >= 1");
  if (convergence_overlap_min < 2)
    throw DegenerateInput("detector config: convergence_overlap_min must be >= 2");
  if (verifier.enabled && verifier.url.empty())
    throw DegenerateInput("detector config: verifier enabled without url");
}

DetectionTier default_tier(Criterion c) {
  return is_rule_based(c) ? DetectionTier::RuleBased : DetectionTier::Heuristic;
}

bool is_rule_based(Criterion c) {
  switch (c) {
    case Criterion::NoneOfTheAbove:
    case Criterion::LongestOptionCorrect:
    case Criterion::TrueFalseQuestion:
    case Criterion::AllOfTheAbove:
    case Criterion::FillInTheBlank:
    case Criterion::AbsoluteTerms:
    case Criterion::LostSequence:
    case Criterion::VagueTerms:
    case Criterion::NegativeWording:
      return true;
    default:
      return false;
  }
}

bool needs_external_verifier(Criterion c) {
  switch (c) {
    case Criterion::AmbiguousUnclear:
    case Criterion::GratuitousInformation:
    case Criterion::ConvergenceCues:
    case Criterion::UnfocusedStem:
    case Criterion::ComplexKType:
    case Criterion::MoreThanOneCorrect:
      return true;
    default:
      return false;
  }
}

std::string criterion_definition(Criterion c) {
  switch (c) {
    case Criterion::AmbiguousUnclear:
      return "The question text and options must use clear, precise language that cannot be "
             "misread.";
    case Criterion::ImplausibleDistractors:
      return "Every incorrect option must be realistic enough that a student could plausibly "
             "choose it.";
    case Criterion::NoneOfTheAbove:
      return "Options must not include a 'none of the above' style choice.";
    case Criterion::LongestOptionCorrect:
      return "The correct option must not be noticeably longer or more detailed than the "
             "distractors.";
    case Criterion::GratuitousInformation:
      return "The question text must not include details that play no part in answering it.";
    case Criterion::TrueFalseQuestion:
      return "Options must not be structured as a list of true/false statements.";
    case Criterion::ConvergenceCues:
      return "Options must not share overlapping wording that points toward the correct answer.";
    case Criterion::LogicalCues:
      return "The stem and correct option must not share clues that let a test-wise student "
             "pick the answer.";
    case Criterion::AllOfTheAbove:
      return "Options must not include an 'all of the above' style choice.";
    case Criterion::FillInTheBlank:
      return "The question text must not leave a blank in the middle of a sentence.";
    case Criterion::AbsoluteTerms:
      return "Options must not use extreme words such as 'always' or 'never'.";
    case Criterion::WordRepeats:
      return "Words from the question text must not recur only in the correct option.";
    case Criterion::UnfocusedStem:
      return "The question text must pose a specific question that is understandable without "
             "reading the options.";
    case Criterion::ComplexKType:
      return "The question must not ask for combinations of other options (K-type format).";
    case Criterion::GrammaticalCues:
      return "All options must be grammatically consistent with the question text and parallel "
             "in form.";
    case Criterion::LostSequence:
      return "Numeric or chronological options must be arranged in a logical order.";
    case Criterion::VagueTerms:
      return "Options must not use subjective frequency words such as 'frequently' or "
             "'occasionally'.";
    case Criterion::MoreThanOneCorrect:
      return "Exactly one option may be the best answer.";
    case Criterion::NegativeWording:
      return "The question text must avoid negative phrasing such as 'not' or 'except'.";
  }
  return "";
}

IwfAnnotation detect(const Mcq& item, const DetectorConfig& config) {
  config.validate();
  const ItemView view(item);
  IwfAnnotation ann;
  ann.item_id = item.item_id;
  for (Criterion c : all_criteria()) {
    CriterionResult result;
    if (needs_external_verifier(c) && config.verifier.enabled) {
      try {
        const VerifierVerdict verdict = verify_external(item, c, config.verifier);
        result.criterion = c;
        result.flagged = verdict.flagged;
        result.evidence = verdict.flagged
                              ? (verdict.rationale.empty() ? "flagged by external verifier"
                                                           : verdict.rationale)
                              : verdict.rationale;
        result.tier = DetectionTier::ExternalVerifier;
      } catch (const VerifierUnavailable&) {
        result = offline_result(view, c, config);
        result.tier = DetectionTier::VerifierUnavailable;
      }
    } else {
      result = offline_result(view, c, config);
    }
    const auto idx = static_cast<std::size_t>(c);
    ann.flags[idx] = result.flagged;
    ann.evidence[idx] = result.evidence;
    ann.tiers[idx] = result.tier;
  }
  return ann;
}

BankSummary summarize(const std::vector<IwfAnnotation>& annotations) {
  BankSummary summary;
  summary.n_items = annotations.size();
  for (const auto& ann : annotations) {
    for (int i = 0; i < kCriterionCount; ++i) {
      if (ann.flags[static_cast<std::size_t>(i)]) {
        summary.total_flags++;
        summary.prevalence[static_cast<std::size_t>(i)] += 1.0;
      }
    }
  }
  if (summary.n_items > 0) {
    summary.mean_flags_per_item =
        static_cast<double>(summary.total_flags) / static_cast<double>(summary.n_items);
    for (auto& p : summary.prevalence) p /= static_cast<double>(summary.n_items);
  }
  return summary;
}

DetectBankResult detect_bank(const std::vector<Mcq>& items, const DetectorConfig& config,
                             int jobs) {
  config.validate();
  DetectBankResult result;
  result.annotations.resize(items.size());
  int effective_jobs = jobs;
  if (config.verifier.enabled && config.verifier.max_in_flight > 0) {
    effective_jobs = std::min(jobs, config.verifier.max_in_flight);
  }
  parallel_for(items.size(), effective_jobs,
               [&](std::size_t i) { result.annotations[i] = detect(items[i], config); });
  result.summary = summarize(result.annotations);
  return result;
}

}  // namespace itemgauge::iwf
