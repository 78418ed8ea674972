#pragma once
// Document retrieval. Iteration 1 ("coarse") unions exact title mentions
// with TF-IDF ranking; iteration 2 ("refined") unions the documents behind
// the iteration-1 sentence candidates with the hyperlink targets of the
// top-1 candidate, which is what lets two-hop claims reach documents the
// claim text never names.

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "factver/corpus.hpp"
#include "factver/errors.hpp"
#include "factver/text.hpp"
#include "factver/types.hpp"

namespace factver {

// Documents whose normalized title (trailing parenthetical disambiguator
// dropped) occurs as a contiguous token run inside the claim. Titles not
// mentioned in the claim are excluded by construction.
inline std::set<std::string> mention_match(const std::string& claim_text,
                                           const CorpusIndex& index) {
  std::set<std::string> out;
  std::vector<std::string> claim_tokens = tokenize_terms(claim_text);
  if (claim_tokens.empty()) return out;
  for (const auto& [doc_id, doc] : index.documents) {
    std::vector<std::string> title_tokens =
        tokenize_terms(strip_disambiguator(normalize_title(doc_id)));
    if (title_tokens.empty()) continue;
    if (contains_token_run(claim_tokens, title_tokens)) out.insert(doc_id);
  }
  return out;
}

// Top-k documents by cosine similarity of TF-IDF vectors (raw term counts,
// idf = ln(total / (1 + df))). Ties and all-zero scores fall back to
// ascending doc_id.
inline std::vector<std::pair<std::string, double>> tfidf_retrieve(const std::string& claim_text,
                                                                  const CorpusIndex& index,
                                                                  int k) {
  if (k < 1) throw InputError("tfidf_retrieve: k must be >= 1");
  std::map<std::string, int> claim_tf;
  for (const std::string& term : tokenize_terms(claim_text)) ++claim_tf[term];
  double claim_sq = 0.0;
  std::map<std::string, double> claim_w;
  for (const auto& [term, tf] : claim_tf) {
    double w = tf * index.idf(term);
    claim_w[term] = w;
    claim_sq += w * w;
  }
  const double claim_norm = std::sqrt(claim_sq);

  std::vector<std::pair<std::string, double>> scored;
  scored.reserve(index.documents.size());
  for (const auto& [doc_id, terms] : index.doc_terms) {
    double dot = 0.0;
    for (const auto& [term, w] : claim_w) {
      auto it = terms.find(term);
      if (it != terms.end()) dot += w * it->second * index.idf(term);
    }
    double norm = index.doc_norm.at(doc_id);
    double score = (claim_norm > 0.0 && norm > 0.0) ? dot / (claim_norm * norm) : 0.0;
    scored.emplace_back(doc_id, score);
  }
  std::sort(scored.begin(), scored.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });
  if (static_cast<int>(scored.size()) > k) scored.resize(k);
  return scored;
}

// Iteration-1 candidates: title mentions first, then TF-IDF hits.
inline DocCandidateSet coarse_retrieve(int64_t claim_id, const std::string& claim_text,
                                       const CorpusIndex& index, int k_tfidf = 5) {
  DocCandidateSet set;
  set.claim_id = claim_id;
  for (const std::string& doc_id : mention_match(claim_text, index))
    set.docs.push_back({doc_id, "mention"});
  for (const auto& [doc_id, score] : tfidf_retrieve(claim_text, index, k_tfidf))
    if (!set.contains(doc_id)) set.docs.push_back({doc_id, "tfidf"});
  return set;
}

// Iteration-2 candidates: documents that contributed an iteration-1
// sentence candidate (top-1 document first), then the hyperlink targets of
// the top-1 candidate's sentence.
inline DocCandidateSet refine_retrieve(int64_t claim_id,
                                       const std::vector<ScoredSentence>& iter1_candidates,
                                       const CorpusIndex& index) {
  DocCandidateSet set;
  set.claim_id = claim_id;
  if (iter1_candidates.empty()) return set;
  for (const ScoredSentence& s : iter1_candidates)
    if (index.get_document(s.doc_id) == nullptr)
      throw InputError("refine_retrieve: candidate document '" + s.doc_id +
                       "' is not in the corpus");
  const ScoredSentence& top1 = iter1_candidates.front();
  set.docs.push_back({top1.doc_id, "evidence_doc"});
  for (const ScoredSentence& s : iter1_candidates)
    if (!set.contains(s.doc_id)) set.docs.push_back({s.doc_id, "evidence_doc"});
  for (const std::string& doc_id : index.hyperlinked_docs(top1.doc_id, top1.sentence_index))
    if (!set.contains(doc_id)) set.docs.push_back({doc_id, "hyperlink"});
  return set;
}

// Document-level precision / recall / F1 against gold evidence groups.
// A claim is recalled when at least one gold group has every document
// covered by the prediction; precision is micro over retrieved documents.
// Claims without evidence groups (NOT ENOUGH INFO) are excluded.
inline PRF doc_metrics(const std::map<int64_t, DocCandidateSet>& predictions,
                       const std::vector<ClaimRecord>& gold) {
  long considered = 0, recalled = 0, retrieved = 0, relevant_retrieved = 0;
  for (const ClaimRecord& claim : gold) {
    if (claim.evidence_groups.empty()) continue;
    ++considered;
    std::set<std::string> predicted;
    auto it = predictions.find(claim.claim_id);
    if (it != predictions.end())
      for (const DocCandidate& d : it->second.docs) predicted.insert(d.doc_id);
    std::set<std::string> gold_docs;
    bool covered = false;
    for (const auto& group : claim.evidence_groups) {
      bool all = true;
      for (const EvidenceRef& e : group) {
        gold_docs.insert(e.doc_id);
        if (!predicted.count(e.doc_id)) all = false;
      }
      if (all) covered = true;
    }
    if (covered) ++recalled;
    retrieved += static_cast<long>(predicted.size());
    for (const std::string& d : predicted)
      if (gold_docs.count(d)) ++relevant_retrieved;
  }
  if (considered == 0) throw InputError("doc_metrics: no gold claims carry evidence groups");
  PRF prf;
  prf.recall = 100.0 * static_cast<double>(recalled) / static_cast<double>(considered);
  prf.precision =
      retrieved == 0
          ? 0.0
          : 100.0 * static_cast<double>(relevant_retrieved) / static_cast<double>(retrieved);
  prf.f1 = (prf.precision + prf.recall) == 0.0
               ? 0.0
               : 2.0 * prf.precision * prf.recall / (prf.precision + prf.recall);
  return prf;
}

}  // namespace factver
