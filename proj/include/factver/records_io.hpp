#pragma once
// Line-delimited JSON record files exchanged between pipeline stages:
// claims (gold data), document candidate sets, scored sentence candidates,
// and final predictions. Loaders validate eagerly and name the offending
// file and line; writers emit one compact object per line in a stable
// field order so identical inputs produce byte-identical files.

#include <cstdint>
#include <fstream>
#include <map>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "factver/errors.hpp"
#include "factver/types.hpp"

namespace factver {

namespace detail {

// Applies fn to each non-blank line parsed as a JSON object.
template <typename Fn>
void for_each_record(const std::string& path, Fn&& fn) {
  std::ifstream is(path);
  if (!is) throw InputError("cannot open file: " + path);
  std::string line;
  long line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    nlohmann::json rec = nlohmann::json::parse(line, nullptr, false);
    if (rec.is_discarded() || !rec.is_object())
      throw InputError(path + " line " + std::to_string(line_no) + ": malformed record");
    fn(rec, path + " line " + std::to_string(line_no));
  }
}

}  // namespace detail

// Claims: {"id", "claim", optional "label", optional "evidence"} where
// evidence is a list of groups, each group a list of
// [annotation_id, evidence_id, page, line]; entries with null page carry no
// usable evidence and are dropped.
inline std::vector<ClaimRecord> load_claims(const std::string& path) {
  std::vector<ClaimRecord> out;
  std::set<int64_t> seen;
  detail::for_each_record(path, [&](const nlohmann::json& rec, const std::string& where) {
    if (!rec.contains("id") || !rec["id"].is_number_integer())
      throw InputError(where + ": claim lacks an integer 'id'");
    if (!rec.contains("claim") || !rec["claim"].is_string())
      throw InputError(where + ": claim lacks a string 'claim'");
    ClaimRecord c;
    c.claim_id = rec["id"].get<int64_t>();
    if (!seen.insert(c.claim_id).second)
      throw InputError(where + ": duplicate claim id " + std::to_string(c.claim_id));
    c.text = rec["claim"].get<std::string>();
    if (rec.contains("label") && !rec["label"].is_null()) {
      if (!rec["label"].is_string()) throw InputError(where + ": label must be a string");
      c.label = parse_label(rec["label"].get<std::string>());
      c.has_label = true;
    }
    if (rec.contains("evidence") && !rec["evidence"].is_null()) {
      if (!rec["evidence"].is_array()) throw InputError(where + ": evidence must be a list");
      for (const auto& group : rec["evidence"]) {
        if (!group.is_array()) throw InputError(where + ": evidence group must be a list");
        std::set<EvidenceRef> members;
        for (const auto& entry : group) {
          if (!entry.is_array() || entry.size() < 4)
            throw InputError(where + ": evidence entry must be [aid, eid, page, line]");
          if (entry[2].is_null()) continue;  // NEI-style annotation, no real evidence
          if (!entry[2].is_string() || !entry[3].is_number_integer())
            throw InputError(where + ": evidence entry page/line must be string/integer");
          members.insert({entry[2].get<std::string>(), entry[3].get<int>()});
        }
        if (!members.empty())
          c.evidence_groups.emplace_back(members.begin(), members.end());
      }
    }
    if (c.has_label && c.label == Label::NotEnoughInfo && !c.evidence_groups.empty())
      throw InputError(where + ": NOT ENOUGH INFO claim carries evidence groups");
    out.push_back(std::move(c));
  });
  return out;
}

inline void save_claims(const std::string& path, const std::vector<ClaimRecord>& claims) {
  std::ofstream os(path);
  if (!os) throw InputError("cannot open file for writing: " + path);
  for (const ClaimRecord& c : claims) {
    nlohmann::json rec;
    rec["id"] = c.claim_id;
    rec["claim"] = c.text;
    if (c.has_label) rec["label"] = label_name(c.label);
    nlohmann::json groups = nlohmann::json::array();
    for (const auto& group : c.evidence_groups) {
      nlohmann::json g = nlohmann::json::array();
      for (const EvidenceRef& e : group)
        g.push_back({0, 0, e.doc_id, e.sentence_index});
      groups.push_back(std::move(g));
    }
    rec["evidence"] = std::move(groups);
    os << rec.dump() << "\n";
  }
  if (!os) throw InputError("write failed: " + path);
}

// Document candidate sets: {"claim_id", "docs": [{"doc_id", "source"}, ...]}.
inline std::map<int64_t, DocCandidateSet> load_doc_candidates(const std::string& path) {
  std::map<int64_t, DocCandidateSet> out;
  detail::for_each_record(path, [&](const nlohmann::json& rec, const std::string& where) {
    if (!rec.contains("claim_id") || !rec["claim_id"].is_number_integer())
      throw InputError(where + ": record lacks an integer 'claim_id'");
    if (!rec.contains("docs") || !rec["docs"].is_array())
      throw InputError(where + ": record lacks a 'docs' list");
    DocCandidateSet set;
    set.claim_id = rec["claim_id"].get<int64_t>();
    if (out.count(set.claim_id))
      throw InputError(where + ": duplicate claim_id " + std::to_string(set.claim_id));
    for (const auto& d : rec["docs"]) {
      if (!d.is_object() || !d.contains("doc_id") || !d.contains("source"))
        throw InputError(where + ": each doc needs 'doc_id' and 'source'");
      set.docs.push_back({d["doc_id"].get<std::string>(), d["source"].get<std::string>()});
    }
    out.emplace(set.claim_id, std::move(set));
  });
  return out;
}

inline void save_doc_candidates(const std::string& path,
                                const std::map<int64_t, DocCandidateSet>& sets) {
  std::ofstream os(path);
  if (!os) throw InputError("cannot open file for writing: " + path);
  for (const auto& [id, set] : sets) {
    nlohmann::json docs = nlohmann::json::array();
    for (const DocCandidate& d : set.docs)
      docs.push_back({{"doc_id", d.doc_id}, {"source", d.source}});
    nlohmann::json rec;
    rec["claim_id"] = id;
    rec["docs"] = std::move(docs);
    os << rec.dump() << "\n";
  }
  if (!os) throw InputError("write failed: " + path);
}

// Scored sentences, one record per sentence, grouped by claim:
// {"claim_id", "doc_id", "sentence_index", "score", "iteration"}.
inline std::map<int64_t, std::vector<ScoredSentence>> load_scored_sentences(
    const std::string& path) {
  std::map<int64_t, std::vector<ScoredSentence>> out;
  detail::for_each_record(path, [&](const nlohmann::json& rec, const std::string& where) {
    for (const char* field : {"claim_id", "doc_id", "sentence_index", "score", "iteration"})
      if (!rec.contains(field))
        throw InputError(where + ": record lacks '" + std::string(field) + "'");
    ScoredSentence s;
    s.doc_id = rec["doc_id"].get<std::string>();
    s.sentence_index = rec["sentence_index"].get<int>();
    s.score = rec["score"].get<double>();
    s.iteration = rec["iteration"].get<int>();
    out[rec["claim_id"].get<int64_t>()].push_back(std::move(s));
  });
  return out;
}

inline void save_scored_sentences(const std::string& path,
                                  const std::map<int64_t, std::vector<ScoredSentence>>& sents) {
  std::ofstream os(path);
  if (!os) throw InputError("cannot open file for writing: " + path);
  for (const auto& [id, list] : sents) {
    for (const ScoredSentence& s : list) {
      nlohmann::json rec;
      rec["claim_id"] = id;
      rec["doc_id"] = s.doc_id;
      rec["sentence_index"] = s.sentence_index;
      rec["score"] = s.score;
      rec["iteration"] = s.iteration;
      os << rec.dump() << "\n";
    }
  }
  if (!os) throw InputError("write failed: " + path);
}

// Predictions: {"claim_id", "predicted_label", "evidence": [[doc, idx]...],
// "node_confidences": [...]}. The five-sentence evidence cap is a contract;
// oversized records are rejected at load, never truncated.
inline std::map<int64_t, Prediction> load_predictions(const std::string& path) {
  std::map<int64_t, Prediction> out;
  detail::for_each_record(path, [&](const nlohmann::json& rec, const std::string& where) {
    if (!rec.contains("claim_id") || !rec["claim_id"].is_number_integer())
      throw InputError(where + ": record lacks an integer 'claim_id'");
    if (!rec.contains("predicted_label") || !rec["predicted_label"].is_string())
      throw InputError(where + ": record lacks a string 'predicted_label'");
    Prediction p;
    p.claim_id = rec["claim_id"].get<int64_t>();
    if (out.count(p.claim_id))
      throw InputError(where + ": duplicate claim_id " + std::to_string(p.claim_id));
    p.predicted_label = parse_label(rec["predicted_label"].get<std::string>());
    if (rec.contains("evidence") && !rec["evidence"].is_null()) {
      for (const auto& e : rec["evidence"]) {
        if (!e.is_array() || e.size() != 2)
          throw InputError(where + ": evidence entries must be [doc_id, sentence_index]");
        p.evidence.push_back({e[0].get<std::string>(), e[1].get<int>()});
      }
    }
    if (p.evidence.size() > 5)
      throw InputError(where + ": prediction carries " + std::to_string(p.evidence.size()) +
                       " evidence sentences; the cap is 5");
    if (rec.contains("node_confidences") && !rec["node_confidences"].is_null())
      for (const auto& v : rec["node_confidences"]) p.node_confidences.push_back(v.get<double>());
    out.emplace(p.claim_id, std::move(p));
  });
  return out;
}

inline void save_predictions(const std::string& path,
                             const std::map<int64_t, Prediction>& preds) {
  std::ofstream os(path);
  if (!os) throw InputError("cannot open file for writing: " + path);
  for (const auto& [id, p] : preds) {
    nlohmann::json ev = nlohmann::json::array();
    for (const EvidenceRef& e : p.evidence) ev.push_back({e.doc_id, e.sentence_index});
    nlohmann::json rec;
    rec["claim_id"] = id;
    rec["predicted_label"] = label_name(p.predicted_label);
    rec["evidence"] = std::move(ev);
    rec["node_confidences"] = p.node_confidences;
    os << rec.dump() << "\n";
  }
  if (!os) throw InputError("write failed: " + path);
}

// Vector convenience; records land sorted by claim_id either way.
inline void save_predictions(const std::string& path, const std::vector<Prediction>& preds) {
  std::map<int64_t, Prediction> by_id;
  for (const Prediction& p : preds) {
    if (!by_id.emplace(p.claim_id, p).second)
      throw InputError("duplicate prediction for claim " + std::to_string(p.claim_id));
  }
  save_predictions(path, by_id);
}

}  // namespace factver
