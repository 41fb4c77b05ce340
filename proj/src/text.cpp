#include "itemgauge/text.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cstdlib>

namespace itemgauge::text {

namespace {

bool is_word_char(unsigned char c) { return std::isalnum(c) || c >= 0x80; }

}  // namespace

std::string normalize(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  bool pending_space = false;
  for (unsigned char c : s) {
    if (std::isspace(c)) {
      pending_space = !out.empty();
      continue;
    }
    if (pending_space) {
      out.push_back(' ');
      pending_space = false;
    }
    out.push_back(static_cast<char>(std::tolower(c)));
  }
  return out;
}

std::vector<std::string> tokenize(std::string_view s) {
  std::vector<std::string> tokens;
  std::string current;
  for (std::size_t i = 0; i < s.size(); ++i) {
    const unsigned char c = static_cast<unsigned char>(s[i]);
    if (is_word_char(c)) {
      current.push_back(static_cast<char>(std::tolower(c)));
    } else if (c == '\'' && !current.empty() && i + 1 < s.size() &&
               is_word_char(static_cast<unsigned char>(s[i + 1]))) {
      current.push_back('\'');
    } else if (!current.empty()) {
      tokens.push_back(std::move(current));
      current.clear();
    }
  }
  if (!current.empty()) tokens.push_back(std::move(current));
  return tokens;
}

const std::set<std::string>& stopwords() {
  static const std::set<std::string> words{
      "a",       "about",   "above",  "after",   "again",  "against", "all",     "am",
      "an",      "and",     "any",    "are",     "aren't", "as",      "at",      "be",
      "because", "been",    "before", "being",   "below",  "between", "both",    "but",
      "by",      "can",     "cannot", "could",   "did",    "do",      "does",    "doing",
      "down",    "during",  "each",   "few",     "following", "for",  "from",    "further",
      "had",     "has",     "have",   "having",  "he",     "her",     "here",    "hers",
      "herself", "him",     "himself", "his",    "how",    "i",       "if",      "in",
      "into",    "is",      "it",     "its",     "itself", "just",    "me",      "more",
      "most",    "my",      "myself", "no",      "nor",    "not",     "now",     "of",
      "off",     "on",      "once",   "only",    "or",     "other",   "our",     "ours",
      "ourselves", "out",   "over",   "own",     "same",   "she",     "should",  "so",
      "some",    "such",    "than",   "that",    "the",    "their",   "theirs",  "them",
      "themselves", "then", "there",  "these",   "they",   "this",    "those",   "through",
      "to",      "too",     "under",  "until",   "up",     "very",    "was",     "we",
      "were",    "what",    "when",   "where",   "which",  "while",   "who",     "whom",
      "why",     "will",    "with",   "would",   "you",    "your",    "yours",   "yourself",
      "yourselves", "also", "may",    "might",   "must",   "shall",   "upon",    "via",
      "whose",   "yet",     "many",   "much",    "every",  "either",  "neither", "one",
      "two",     "three",   "however", "therefore", "thus", "hence"};
  return words;
}

bool is_stopword(const std::string& token) { return stopwords().count(token) > 0; }

std::vector<std::string> content_tokens(std::string_view s) {
  std::vector<std::string> out;
  for (auto& tok : tokenize(s)) {
    if (!is_stopword(tok)) out.push_back(std::move(tok));
  }
  return out;
}

std::vector<std::string> split_sentences(std::string_view s) {
  std::vector<std::string> out;
  std::string current;
  for (char c : s) {
    if (c == '.' || c == '!' || c == '?') {
      std::string trimmed = normalize(current);
      if (!trimmed.empty()) out.push_back(std::move(trimmed));
      current.clear();
    } else {
      current.push_back(c);
    }
  }
  std::string trimmed = normalize(current);
  if (!trimmed.empty()) out.push_back(std::move(trimmed));
  return out;
}

bool contains_whole_word(std::string_view normalized, std::string_view word) {
  if (word.empty()) return false;
  std::size_t pos = 0;
  while ((pos = normalized.find(word, pos)) != std::string_view::npos) {
    const bool left_ok =
        pos == 0 || !is_word_char(static_cast<unsigned char>(normalized[pos - 1]));
    const std::size_t end = pos + word.size();
    const bool right_ok =
        end >= normalized.size() || !is_word_char(static_cast<unsigned char>(normalized[end]));
    if (left_ok && right_ok) return true;
    pos += 1;
  }
  return false;
}

std::string strip_quoted(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  char open = 0;
  for (char c : s) {
    if (open != 0) {
      if (c == open) open = 0;
      continue;
    }
    if (c == '"' || c == '\'') {
      open = c;
      continue;
    }
    out.push_back(c);
  }
  return out;
}

bool parse_number(std::string_view option, double* value) {
  std::string cleaned;
  cleaned.reserve(option.size());
  for (char c : option) {
    if (c == ',' || c == '$' || c == '%' || std::isspace(static_cast<unsigned char>(c))) continue;
    cleaned.push_back(c);
  }
  if (cleaned.empty()) return false;
  const char* begin = cleaned.c_str();
  char* end = nullptr;
  const double v = std::strtod(begin, &end);
  if (end != begin + cleaned.size()) return false;
  *value = v;
  return true;
}

bool parse_sequence_value(std::string_view option, double* value) {
  std::string trimmed = normalize(option);
  if (parse_number(trimmed, value)) return true;
  // d/m/y or y-m-d style dates -> comparable scalar
  int parts[3] = {0, 0, 0};
  int part_count = 0;
  std::string digits;
  char sep = 0;
  for (std::size_t i = 0; i <= trimmed.size(); ++i) {
    const char c = i < trimmed.size() ? trimmed[i] : '\0';
    if (std::isdigit(static_cast<unsigned char>(c))) {
      digits.push_back(c);
    } else if ((c == '/' || c == '-') && !digits.empty() && part_count < 2) {
      if (sep == 0) sep = c;
      if (c != sep) return false;
      parts[part_count++] = std::atoi(digits.c_str());
      digits.clear();
    } else if (c == '\0' && !digits.empty() && part_count == 2) {
      parts[part_count++] = std::atoi(digits.c_str());
      digits.clear();
    } else {
      return false;
    }
  }
  if (part_count != 3) return false;
  // Heuristic: a 4-digit leading part is y-m-d, otherwise d/m/y.
  long y, m, d;
  if (parts[0] >= 1000) {
    y = parts[0], m = parts[1], d = parts[2];
  } else {
    d = parts[0], m = parts[1], y = parts[2];
  }
  *value = static_cast<double>(y * 10000 + m * 100 + d);
  return true;
}

}  // namespace itemgauge::text
