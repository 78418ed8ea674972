#pragma once
// Verification metrics and dataset bookkeeping. The strict score counts a
// claim only when the label is right AND, for SUPPORTS / REFUTES, the
// predicted evidence fully covers at least one gold group; NOT ENOUGH INFO
// needs the label alone. Label accuracy drops the evidence condition, so
// strict score <= label accuracy always.

#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "factver/errors.hpp"
#include "factver/types.hpp"

namespace factver {

struct DatasetStats {
  long supports = 0;
  long refutes = 0;
  long nei = 0;
  long total = 0;
};

inline DatasetStats dataset_stats(const std::vector<ClaimRecord>& claims) {
  DatasetStats s;
  for (const ClaimRecord& c : claims) {
    if (!c.has_label)
      throw InputError("claim " + std::to_string(c.claim_id) + " has no label");
    switch (c.label) {
      case Label::Supports: ++s.supports; break;
      case Label::Refutes: ++s.refutes; break;
      case Label::NotEnoughInfo: ++s.nei; break;
    }
    ++s.total;
  }
  return s;
}

namespace detail {

inline std::map<int64_t, const Prediction*> index_predictions(
    const std::vector<Prediction>& predictions) {
  std::map<int64_t, const Prediction*> by_id;
  for (const Prediction& p : predictions)
    if (!by_id.emplace(p.claim_id, &p).second)
      throw InputError("duplicate claim_id " + std::to_string(p.claim_id) + " in predictions");
  return by_id;
}

inline bool evidence_covered(const ClaimRecord& gold, const Prediction& pred) {
  std::set<EvidenceRef> predicted(pred.evidence.begin(), pred.evidence.end());
  for (const auto& group : gold.evidence_groups) {
    bool all = true;
    for (const EvidenceRef& e : group)
      if (!predicted.count(e)) {
        all = false;
        break;
      }
    if (all) return true;
  }
  return false;
}

}  // namespace detail

// Strict score: label correct and (NEI, or one gold group fully covered).
// Gold claims without a prediction count as wrong.
inline double fever_score(const std::vector<Prediction>& predictions,
                          const std::vector<ClaimRecord>& gold) {
  if (gold.empty()) throw InputError("fever_score: empty gold set");
  auto by_id = detail::index_predictions(predictions);
  long hits = 0;
  for (const ClaimRecord& c : gold) {
    if (!c.has_label)
      throw InputError("gold claim " + std::to_string(c.claim_id) + " has no label");
    auto it = by_id.find(c.claim_id);
    if (it == by_id.end()) continue;
    const Prediction& p = *it->second;
    if (p.predicted_label != c.label) continue;
    if (c.label == Label::NotEnoughInfo || detail::evidence_covered(c, p)) ++hits;
  }
  return 100.0 * static_cast<double>(hits) / static_cast<double>(gold.size());
}

inline double label_accuracy(const std::vector<Prediction>& predictions,
                             const std::vector<ClaimRecord>& gold) {
  if (gold.empty()) throw InputError("label_accuracy: empty gold set");
  auto by_id = detail::index_predictions(predictions);
  long hits = 0;
  for (const ClaimRecord& c : gold) {
    if (!c.has_label)
      throw InputError("gold claim " + std::to_string(c.claim_id) + " has no label");
    auto it = by_id.find(c.claim_id);
    if (it != by_id.end() && it->second->predicted_label == c.label) ++hits;
  }
  return 100.0 * static_cast<double>(hits) / static_cast<double>(gold.size());
}

struct SplitPart {
  std::string name;  // Single, Single+, Multi, Multi+, NEI
  std::vector<int64_t> claim_ids;
};

// Partitions labeled dev claims by evidence-group shape. The five parts are
// disjoint and exhaustive; a claim no rule covers (a SUPPORTS / REFUTES
// claim with no evidence groups) is a data defect and is reported as one.
inline std::vector<SplitPart> partition_dev(const std::vector<ClaimRecord>& claims) {
  std::vector<SplitPart> parts = {{"Single", {}}, {"Single+", {}}, {"Multi", {}},
                                  {"Multi+", {}}, {"NEI", {}}};
  for (const ClaimRecord& c : claims) {
    if (!c.has_label)
      throw InputError("claim " + std::to_string(c.claim_id) + " has no label");
    if (c.label == Label::NotEnoughInfo) {
      parts[4].claim_ids.push_back(c.claim_id);
      continue;
    }
    if (c.evidence_groups.empty())
      throw InputError("claim " + std::to_string(c.claim_id) +
                       " matches no dev part: labeled " + label_name(c.label) +
                       " but carries no evidence groups");
    bool any_single = false, any_multi = false, any_over_two = false, all_two = true;
    for (const auto& group : c.evidence_groups) {
      size_t n = group.size();
      if (n == 1) any_single = true;
      if (n > 1) any_multi = true;
      if (n > 2) any_over_two = true;
      if (n != 2) all_two = false;
    }
    if (!any_multi) {
      parts[0].claim_ids.push_back(c.claim_id);  // every group is one sentence
    } else if (any_single) {
      parts[1].claim_ids.push_back(c.claim_id);  // mixed single and multi groups
    } else if (all_two) {
      parts[2].claim_ids.push_back(c.claim_id);  // every group exactly two
    } else if (any_over_two) {
      parts[3].claim_ids.push_back(c.claim_id);  // all multi, some beyond two
    } else {
      throw InputError("claim " + std::to_string(c.claim_id) +
                       " matches no dev part: unexpected evidence group shape");
    }
  }
  return parts;
}

// 3x3 gold-label vs predicted-label counts; missing predictions are not
// counted (they have no predicted label to attribute).
struct ConfusionTable {
  long counts[3][3] = {};
  long errors() const {
    long e = 0;
    for (int g = 0; g < 3; ++g)
      for (int p = 0; p < 3; ++p)
        if (g != p) e += counts[g][p];
    return e;
  }
};

inline ConfusionTable confusion_table(const std::vector<Prediction>& predictions,
                                      const std::vector<ClaimRecord>& gold) {
  auto by_id = detail::index_predictions(predictions);
  ConfusionTable t;
  for (const ClaimRecord& c : gold) {
    if (!c.has_label)
      throw InputError("gold claim " + std::to_string(c.claim_id) + " has no label");
    auto it = by_id.find(c.claim_id);
    if (it == by_id.end()) continue;
    ++t.counts[static_cast<int>(c.label)][static_cast<int>(it->second->predicted_label)];
  }
  return t;
}

}  // namespace factver
