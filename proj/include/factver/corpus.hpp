#pragma once
// Corpus storage: documents with segmented sentences and per-sentence
// hyperlink anchors, plus the derived structures retrieval needs (normalized
// title lookup, term statistics for TF-IDF).
//
// Build is single-writer; once built (or loaded) the index is immutable and
// safe for any number of concurrent readers.
//
// On-disk format: magic "FVIDX001", u32 document count, then per document
// the id, its sentences, and each sentence's anchors. Derived indexes are
// rebuilt on load, which makes the round trip trivially faithful.

#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "factver/binio.hpp"
#include "factver/errors.hpp"
#include "factver/text.hpp"

namespace factver {

struct Document {
  std::string doc_id;
  std::vector<std::string> sentences;
  std::vector<std::vector<std::string>> links;  // anchors per sentence, may dangle

  bool operator==(const Document& o) const {
    return doc_id == o.doc_id && sentences == o.sentences && links == o.links;
  }
};

class CorpusIndex {
 public:
  std::map<std::string, Document> documents;
  std::map<std::string, std::string> title_index;                  // normalized title -> doc_id
  std::map<std::string, int> doc_freq;                             // term -> docs containing it
  std::map<std::string, std::map<std::string, int>> doc_terms;     // doc_id -> term -> count
  std::map<std::string, double> doc_norm;                          // doc_id -> TF-IDF vector norm

  size_t doc_count() const { return documents.size(); }

  const Document* get_document(const std::string& doc_id) const {
    auto it = documents.find(doc_id);
    return it == documents.end() ? nullptr : &it->second;
  }

  // Normalized-title lookup; resolves anchors and mention candidates.
  const std::string* resolve_title(const std::string& title) const {
    auto it = title_index.find(normalize_title(title));
    return it == title_index.end() ? nullptr : &it->second;
  }

  // Corpus-resident targets of one sentence's anchors; dangling anchors are
  // stored but dropped here.
  std::set<std::string> hyperlinked_docs(const std::string& doc_id, int sentence_index) const {
    const Document* doc = get_document(doc_id);
    if (doc == nullptr)
      throw InputError("hyperlinked_docs: unknown document '" + doc_id + "'");
    if (sentence_index < 0 || sentence_index >= static_cast<int>(doc->sentences.size()))
      throw InputError("hyperlinked_docs: document '" + doc_id + "' has no sentence " +
                       std::to_string(sentence_index));
    std::set<std::string> out;
    for (const std::string& anchor : doc->links[sentence_index]) {
      if (const std::string* target = resolve_title(anchor)) out.insert(*target);
    }
    return out;
  }

  // Rebuilds title_index, term statistics, and document norms from the
  // stored documents. Norms use the corpus IDF, so they are only valid once
  // every document is in.
  void finalize() {
    title_index.clear();
    doc_freq.clear();
    doc_terms.clear();
    doc_norm.clear();
    for (const auto& [id, doc] : documents) {
      std::string norm = normalize_title(id);
      auto [it, inserted] = title_index.emplace(norm, id);
      if (!inserted)
        throw InputError("titles '" + it->second + "' and '" + id +
                         "' normalize to the same key '" + norm + "'");
      std::map<std::string, int>& counts = doc_terms[id];
      for (const std::string& sent : doc.sentences)
        for (const std::string& term : tokenize_terms(sent)) ++counts[term];
      for (const auto& [term, n] : counts) ++doc_freq[term];
    }
    const double total = static_cast<double>(documents.size());
    for (const auto& [id, counts] : doc_terms) {
      double sq = 0.0;
      for (const auto& [term, n] : counts) {
        double idf = std::log(total / (1.0 + doc_freq.at(term)));
        double w = n * idf;
        sq += w * w;
      }
      doc_norm[id] = std::sqrt(sq);
    }
  }

  double idf(const std::string& term) const {
    auto it = doc_freq.find(term);
    int df = it == doc_freq.end() ? 0 : it->second;
    return std::log(static_cast<double>(documents.size()) / (1.0 + df));
  }

  bool operator==(const CorpusIndex& o) const {
    return documents == o.documents && title_index == o.title_index &&
           doc_freq == o.doc_freq && doc_terms == o.doc_terms;
  }
};

namespace detail {

inline bool parse_int_strict(const std::string& s, int& out) {
  if (s.empty()) return false;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc() && ptr == s.data() + s.size();
}

inline std::vector<std::string> split_on(const std::string& s, char sep) {
  std::vector<std::string> parts;
  size_t start = 0;
  while (true) {
    size_t pos = s.find(sep, start);
    if (pos == std::string::npos) {
      parts.push_back(s.substr(start));
      break;
    }
    parts.push_back(s.substr(start, pos - start));
    start = pos + 1;
  }
  return parts;
}

// One dump record's `lines` payload: newline-separated entries of
// INDEX<TAB>TEXT<TAB>ANCHOR... Indices must run 0,1,2,... with no gaps.
inline void parse_sentence_lines(const std::string& lines, Document& doc,
                                 const std::string& where) {
  int expected = 0;
  for (const std::string& entry : split_on(lines, '\n')) {
    if (entry.empty()) continue;
    std::vector<std::string> fields = split_on(entry, '\t');
    int idx = -1;
    if (!parse_int_strict(fields[0], idx))
      throw InputError(where + ": sentence entry does not start with an index: '" +
                       fields[0] + "'");
    if (idx != expected)
      throw InputError(where + ": sentence index " + std::to_string(idx) +
                       " breaks the 0..n sequence (expected " + std::to_string(expected) + ")");
    ++expected;
    doc.sentences.push_back(fields.size() > 1 ? fields[1] : std::string());
    std::vector<std::string> anchors;
    for (size_t i = 2; i < fields.size(); ++i)
      if (!fields[i].empty()) anchors.push_back(fields[i]);
    doc.links.push_back(std::move(anchors));
  }
}

}  // namespace detail

// Parses line-delimited dump files into a ready-to-query index. Identical
// inputs always produce an identical index.
inline CorpusIndex ingest_dump(const std::vector<std::string>& dump_paths) {
  CorpusIndex index;
  for (const std::string& path : dump_paths) {
    std::ifstream is(path);
    if (!is) throw InputError("cannot open dump file: " + path);
    std::string line;
    long line_no = 0;
    while (std::getline(is, line)) {
      ++line_no;
      if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
      const std::string where = path + " line " + std::to_string(line_no);
      nlohmann::json rec = nlohmann::json::parse(line, nullptr, false);
      if (rec.is_discarded() || !rec.is_object())
        throw InputError(where + ": malformed record (not a JSON object)");
      if (!rec.contains("id") || !rec["id"].is_string())
        throw InputError(where + ": record lacks a string 'id' field");
      if (!rec.contains("lines") || !rec["lines"].is_string())
        throw InputError(where + ": record lacks a string 'lines' field");
      Document doc;
      doc.doc_id = rec["id"].get<std::string>();
      detail::parse_sentence_lines(rec["lines"].get<std::string>(), doc, where);
      auto [it, inserted] = index.documents.emplace(doc.doc_id, std::move(doc));
      if (!inserted)
        throw InputError(where + ": duplicate doc_id '" + it->first + "'");
    }
  }
  index.finalize();
  return index;
}

inline void save_index(const std::string& path, const CorpusIndex& index) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw InputError("cannot open index for writing: " + path);
  static const char magic[8] = {'F', 'V', 'I', 'D', 'X', '0', '0', '1'};
  os.write(magic, 8);
  binio::write_u32(os, static_cast<uint32_t>(index.documents.size()));
  for (const auto& [id, doc] : index.documents) {
    binio::write_str(os, id);
    binio::write_u32(os, static_cast<uint32_t>(doc.sentences.size()));
    for (size_t i = 0; i < doc.sentences.size(); ++i) {
      binio::write_str(os, doc.sentences[i]);
      binio::write_u32(os, static_cast<uint32_t>(doc.links[i].size()));
      for (const std::string& anchor : doc.links[i]) binio::write_str(os, anchor);
    }
  }
  if (!os) throw InputError("write failed for index: " + path);
}

inline CorpusIndex load_index(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw InputError("cannot open index: " + path);
  char magic[8] = {};
  is.read(magic, 8);
  if (!is || std::string(magic, 8) != "FVIDX001")
    throw InputError("not a corpus index (bad magic): " + path);
  CorpusIndex index;
  uint32_t docs = binio::read_u32(is);
  for (uint32_t d = 0; d < docs; ++d) {
    Document doc;
    doc.doc_id = binio::read_str(is);
    uint32_t sents = binio::read_u32(is);
    doc.sentences.reserve(sents);
    doc.links.reserve(sents);
    for (uint32_t s = 0; s < sents; ++s) {
      doc.sentences.push_back(binio::read_str(is));
      uint32_t anchors = binio::read_u32(is);
      std::vector<std::string> link;
      link.reserve(anchors);
      for (uint32_t a = 0; a < anchors; ++a) link.push_back(binio::read_str(is));
      doc.links.push_back(std::move(link));
    }
    index.documents.emplace(doc.doc_id, std::move(doc));
  }
  if (!is) throw InputError("truncated index: " + path);
  index.finalize();
  return index;
}

}  // namespace factver
