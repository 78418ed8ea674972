#pragma once
// The two input layouts the encoders consume.
//
// Document layout (sentence scoring and intra-document evidence encoding;
// the starred slot only appears in retrieval iteration 2):
//   [START] claim [SEP] top1* [SEP] title [SEP] s0 s1 ... [SEP]
// Sentences run contiguously without separators; origin spans locate them.
//
// Evidence-set layout (inter-document evidence encoding):
//   [START] claim [SEP] title1 [SEP] evi1 [SEP] title2 [SEP] evi2 ... [SEP]
//
// In both, the window prefix ends where per-document (or per-evidence)
// content begins, so every window repeats the claim context.

#include <string>
#include <utility>
#include <vector>

#include "factver/corpus.hpp"
#include "factver/errors.hpp"
#include "factver/tokens.hpp"

namespace factver {

inline TokenSequence build_doc_sequence(const Vocabulary& vocab, const std::string& claim,
                                        int claim_max_tokens, const Document& doc,
                                        const std::string* top1) {
  if (doc.sentences.empty())
    throw InputError("cannot build a sequence for empty document '" + doc.doc_id + "'");
  SequenceBuilder b;
  std::vector<int> claim_ids = vocab.encode(claim, claim_max_tokens);
  if (claim_ids.empty()) throw InputError("claim tokenizes to nothing");
  b.unit(UnitKey::claim(), claim_ids);
  b.sep();
  if (top1 != nullptr) {
    b.unit(UnitKey::top1(), vocab.encode(*top1));
    b.sep();
  }
  std::vector<int> title_ids = vocab.encode(doc.doc_id);
  if (title_ids.empty())
    throw InputError("title of document '" + doc.doc_id + "' tokenizes to nothing");
  b.unit(UnitKey::title(), title_ids);
  b.sep();
  b.end_prefix();
  for (size_t i = 0; i < doc.sentences.size(); ++i)
    b.unit(UnitKey::sentence(static_cast<int>(i)), vocab.encode(doc.sentences[i]));
  b.sep();
  return b.take();
}

// `entries` holds (title, evidence sentence text) per evidence, in rank
// order; unit keys title(i) / sentence(i) use the evidence ordinal.
inline TokenSequence build_inter_sequence(
    const Vocabulary& vocab, const std::string& claim, int claim_max_tokens,
    const std::vector<std::pair<std::string, std::string>>& entries) {
  if (entries.empty()) throw InputError("evidence-set sequence needs at least one evidence");
  SequenceBuilder b;
  std::vector<int> claim_ids = vocab.encode(claim, claim_max_tokens);
  if (claim_ids.empty()) throw InputError("claim tokenizes to nothing");
  b.unit(UnitKey::claim(), claim_ids);
  b.sep();
  b.end_prefix();
  for (size_t i = 0; i < entries.size(); ++i) {
    std::vector<int> title_ids = vocab.encode(entries[i].first);
    if (title_ids.empty())
      throw InputError("title of evidence " + std::to_string(i) + " tokenizes to nothing");
    b.unit(UnitKey::title(static_cast<int>(i)), title_ids);
    b.sep();
    b.unit(UnitKey::sentence(static_cast<int>(i)), vocab.encode(entries[i].second));
    b.sep();
  }
  return b.take();
}

}  // namespace factver
