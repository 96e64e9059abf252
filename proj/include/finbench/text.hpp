#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace finbench {

// The project-wide token definition: ceil(1.3 x whitespace-delimited words).
// Every budget, ledger entry and context check uses this one function.
inline int64_t token_count(std::string_view text) {
  int64_t words = 0;
  bool in_word = false;
  for (char c : text) {
    const bool ws = (c == ' ' || c == '\t' || c == '\n' || c == '\r');
    if (!ws && !in_word) {
      ++words;
      in_word = true;
    } else if (ws) {
      in_word = false;
    }
  }
  return static_cast<int64_t>(std::ceil(1.3 * static_cast<double>(words)));
}

inline std::string_view trim(std::string_view s) {
  size_t b = 0, e = s.size();
  while (b < e && (s[b] == ' ' || s[b] == '\t' || s[b] == '\r' || s[b] == '\n')) ++b;
  while (e > b && (s[e - 1] == ' ' || s[e - 1] == '\t' || s[e - 1] == '\r' || s[e - 1] == '\n')) --e;
  return s.substr(b, e - b);
}

inline std::string lower(std::string_view s) {
  std::string out(s);
  for (char& c : out)
    if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
  return out;
}

inline std::vector<std::string> split(std::string_view s, char sep) {
  std::vector<std::string> parts;
  size_t start = 0;
  for (size_t i = 0; i <= s.size(); ++i) {
    if (i == s.size() || s[i] == sep) {
      parts.emplace_back(s.substr(start, i - start));
      start = i + 1;
    }
  }
  return parts;
}

inline bool starts_with(std::string_view s, std::string_view prefix) {
  return s.size() >= prefix.size() && s.substr(0, prefix.size()) == prefix;
}

// Splits text at blank-line paragraph boundaries; used when a single
// section exceeds the context budget.
std::vector<std::string> split_paragraphs(const std::string& text);

// Renders a double with up to `max_decimals` digits, trailing zeros trimmed.
// This is the one rendering used for gold files, planted text and grounding.
std::string format_number(double v, int max_decimals = 4);

}  // namespace finbench
