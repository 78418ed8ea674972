#pragma once
// Domain types shared across retrieval, verification, and evaluation.

#include <string>
#include <vector>

#include "factver/errors.hpp"

namespace factver {

enum class Label { Supports = 0, Refutes = 1, NotEnoughInfo = 2 };

inline const char* label_name(Label l) {
  switch (l) {
    case Label::Supports: return "SUPPORTS";
    case Label::Refutes: return "REFUTES";
    case Label::NotEnoughInfo: return "NOT ENOUGH INFO";
  }
  return "?";
}

inline Label parse_label(const std::string& s) {
  if (s == "SUPPORTS") return Label::Supports;
  if (s == "REFUTES") return Label::Refutes;
  if (s == "NOT ENOUGH INFO") return Label::NotEnoughInfo;
  throw InputError("unknown label: '" + s + "'");
}

// One gold evidence sentence: a document plus a sentence index within it.
struct EvidenceRef {
  std::string doc_id;
  int sentence_index = -1;

  bool operator==(const EvidenceRef& o) const {
    return doc_id == o.doc_id && sentence_index == o.sentence_index;
  }
  bool operator<(const EvidenceRef& o) const {
    if (doc_id != o.doc_id) return doc_id < o.doc_id;
    return sentence_index < o.sentence_index;
  }
};

// A claim with optional gold label and evidence groups. Each group is an
// independently sufficient set of evidence sentences; covering any one group
// completely counts as full evidence. Claims labeled NOT ENOUGH INFO carry
// no groups.
struct ClaimRecord {
  int64_t claim_id = 0;
  std::string text;
  bool has_label = false;
  Label label = Label::NotEnoughInfo;
  std::vector<std::vector<EvidenceRef>> evidence_groups;
};

struct ScoredSentence {
  std::string doc_id;
  int sentence_index = -1;
  double score = 0.0;
  int iteration = 1;
};

// Deterministic sentence ordering: best score first, then doc id, then
// position. Every ranked list in the pipeline sorts this way.
inline bool scored_before(const ScoredSentence& a, const ScoredSentence& b) {
  if (a.score != b.score) return a.score > b.score;
  if (a.doc_id != b.doc_id) return a.doc_id < b.doc_id;
  return a.sentence_index < b.sentence_index;
}

// Documents selected for a claim in one retrieval stage, in rank order,
// with a tag recording why each entered the set.
struct DocCandidate {
  std::string doc_id;
  std::string source;  // "mention", "tfidf", "evidence_doc", "hyperlink"
};

struct DocCandidateSet {
  int64_t claim_id = 0;
  std::vector<DocCandidate> docs;

  bool contains(const std::string& id) const {
    for (const auto& d : docs)
      if (d.doc_id == id) return true;
    return false;
  }
};

// Precision / recall / F1 triple, all as percentages.
struct PRF {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

// Verifier output for one claim.
struct Prediction {
  int64_t claim_id = 0;
  Label predicted_label = Label::NotEnoughInfo;
  std::vector<EvidenceRef> evidence;        // the sentences the verdict rests on
  std::vector<double> node_confidences;     // per evidence node, same order
};

}  // namespace factver
