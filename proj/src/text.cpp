#include "finbench/text.hpp"

#include <cstdio>

namespace finbench {

std::vector<std::string> split_paragraphs(const std::string& text) {
  std::vector<std::string> paras;
  std::string cur;
  size_t i = 0;
  while (i < text.size()) {
    // paragraph boundary: newline followed by optional spaces and another newline
    if (text[i] == '\n') {
      size_t j = i + 1;
      while (j < text.size() && (text[j] == ' ' || text[j] == '\t' || text[j] == '\r')) ++j;
      if (j < text.size() && text[j] == '\n') {
        if (!trim(cur).empty()) paras.push_back(cur);
        cur.clear();
        i = j + 1;
        continue;
      }
    }
    cur.push_back(text[i]);
    ++i;
  }
  if (!trim(cur).empty()) paras.push_back(cur);
  return paras;
}

std::string format_number(double v, int max_decimals) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", max_decimals, v);
  std::string s(buf);
  if (s.find('.') != std::string::npos) {
    size_t last = s.find_last_not_of('0');
    if (s[last] == '.') last -= 1;
    s.erase(last + 1);
  }
  if (s == "-0") s = "0";
  return s;
}

}  // namespace finbench
