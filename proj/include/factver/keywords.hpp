#pragma once
// Keyword extraction for graph edge construction. The contract is a plain
// function so a real noun-phrase / named-entity pipeline can be swapped in;
// the default heuristic takes maximal runs of capitalized tokens, dropping
// a lone sentence-initial stopword ("The" starting a sentence is casing,
// not a name). Keywords are normalized like titles so they compare equal
// across sentences.

#include <array>
#include <functional>
#include <set>
#include <string>
#include <string_view>

#include "factver/text.hpp"

namespace factver {

using KeywordExtractor = std::function<std::set<std::string>(const std::string&)>;

namespace detail {

inline bool is_stopword(const std::string& lower) {
  static const std::set<std::string> kStopwords = {
      "the", "a",  "an",  "in",  "on",   "at",   "of", "for", "to",   "and", "or",
      "but", "is", "was", "are", "were", "it",   "he", "she", "they", "we",  "this",
      "that", "his", "her", "its", "their", "there", "by", "with", "from", "as"};
  return kStopwords.count(lower) != 0;
}

inline bool starts_capitalized(const std::string& token) {
  return !token.empty() && token[0] >= 'A' && token[0] <= 'Z';
}

}  // namespace detail

inline std::set<std::string> extract_keywords(const std::string& sentence) {
  std::set<std::string> out;
  std::vector<std::string> words = tokenize_words_cased(sentence);
  size_t i = 0;
  while (i < words.size()) {
    if (!detail::starts_capitalized(words[i])) {
      ++i;
      continue;
    }
    size_t j = i;
    while (j < words.size() && detail::starts_capitalized(words[j])) ++j;
    const bool lone_initial_stopword =
        i == 0 && j - i == 1 && detail::is_stopword(casefold(words[i]));
    if (!lone_initial_stopword) {
      std::string phrase;
      for (size_t k = i; k < j; ++k) {
        if (!phrase.empty()) phrase.push_back(' ');
        phrase += words[k];
      }
      out.insert(normalize_title(phrase));
    }
    i = j;
  }
  return out;
}

inline KeywordExtractor default_keyword_extractor() {
  return [](const std::string& s) { return extract_keywords(s); };
}

}  // namespace factver
