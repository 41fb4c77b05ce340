#pragma once

#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace itemgauge::text {

// Lowercased (ASCII), whitespace-collapsed, trimmed copy. Non-ASCII bytes
// pass through untouched.
std::string normalize(std::string_view s);

// Word tokens: maximal runs of alphanumeric characters (plus non-ASCII
// bytes), lowercased. Apostrophes inside words are kept ("don't" is one
// token).
std::vector<std::string> tokenize(std::string_view s);

// Fixed 150-word English stopword list used by the overlap heuristics.
const std::set<std::string>& stopwords();
bool is_stopword(const std::string& token);

// Tokens with stopwords removed.
std::vector<std::string> content_tokens(std::string_view s);

// Splits on sentence-terminal punctuation (. ! ?); returns non-empty parts.
std::vector<std::string> split_sentences(std::string_view s);

// Whole-word containment on an already-normalized haystack.
bool contains_whole_word(std::string_view normalized, std::string_view word);

// Removes "double"- and 'single'-quoted spans.
std::string strip_quoted(std::string_view s);

bool parse_number(std::string_view option, double* value);
// Numbers plus d/m/y and y-m-d date forms, mapped to a sortable value.
bool parse_sequence_value(std::string_view option, double* value);

}  // namespace itemgauge::text
