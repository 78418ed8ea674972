#pragma once
// Text normalization and tokenization shared by the corpus index, document
// retrieval and keyword extraction.
//
// Conventions (applied identically everywhere so matches are reproducible):
// - title normalization: underscores to spaces, ASCII case fold, trim
//   surrounding whitespace; non-ASCII bytes pass through unchanged
// - term tokenization: lowercase, split on non-alphanumeric, drop empties

#include <cctype>
#include <string>
#include <string_view>
#include <vector>

namespace factver {

inline bool is_word_byte(unsigned char c) {
  return std::isalnum(c) != 0 || c >= 0x80;  // keep UTF-8 continuation bytes inside tokens
}

inline std::string casefold(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  for (unsigned char c : s) out.push_back(c < 0x80 ? static_cast<char>(std::tolower(c)) : static_cast<char>(c));
  return out;
}

// Normalized form used for title lookups, anchor resolution and mention matching.
inline std::string normalize_title(std::string_view raw) {
  std::string s(raw);
  for (char& c : s)
    if (c == '_') c = ' ';
  size_t b = s.find_first_not_of(" \t\r\n");
  size_t e = s.find_last_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  s = s.substr(b, e - b + 1);
  // collapse runs of spaces so "A__B" and "A B" agree
  std::string folded = casefold(s);
  std::string out;
  out.reserve(folded.size());
  bool prev_space = false;
  for (char c : folded) {
    if (c == ' ') {
      if (!prev_space) out.push_back(' ');
      prev_space = true;
    } else {
      out.push_back(c);
      prev_space = false;
    }
  }
  return out;
}

// Drops one trailing parenthetical disambiguator: "gemini (astrology)" -> "gemini".
inline std::string strip_disambiguator(std::string_view normalized_title) {
  std::string s(normalized_title);
  if (!s.empty() && s.back() == ')') {
    size_t open = s.rfind('(');
    if (open != std::string::npos && open > 0) {
      size_t e = s.find_last_not_of(" ", open - 1);
      if (e != std::string::npos) return s.substr(0, e + 1);
    }
  }
  return s;
}

// Lowercase terms split on non-alphanumeric bytes. Feeds TF-IDF and the
// encoder vocabulary.
inline std::vector<std::string> tokenize_terms(std::string_view text) {
  std::vector<std::string> out;
  std::string cur;
  for (unsigned char c : text) {
    if (is_word_byte(c)) {
      cur.push_back(c < 0x80 ? static_cast<char>(std::tolower(c)) : static_cast<char>(c));
    } else if (!cur.empty()) {
      out.push_back(std::move(cur));
      cur.clear();
    }
  }
  if (!cur.empty()) out.push_back(std::move(cur));
  return out;
}

// Like tokenize_terms but preserves original casing; used by the keyword
// heuristic, which needs capitalization.
inline std::vector<std::string> tokenize_words_cased(std::string_view text) {
  std::vector<std::string> out;
  std::string cur;
  for (unsigned char c : text) {
    if (is_word_byte(c)) {
      cur.push_back(static_cast<char>(c));
    } else if (!cur.empty()) {
      out.push_back(std::move(cur));
      cur.clear();
    }
  }
  if (!cur.empty()) out.push_back(std::move(cur));
  return out;
}

// True when `needle` occurs as a contiguous subsequence of `haystack`.
inline bool contains_token_run(const std::vector<std::string>& haystack,
                               const std::vector<std::string>& needle) {
  if (needle.empty() || needle.size() > haystack.size()) return false;
  for (size_t i = 0; i + needle.size() <= haystack.size(); ++i) {
    bool ok = true;
    for (size_t j = 0; j < needle.size(); ++j)
      if (haystack[i + j] != needle[j]) {
        ok = false;
        break;
      }
    if (ok) return true;
  }
  return false;
}

}  // namespace factver
