#pragma once
// End-to-end orchestration: coarse document retrieval, two sentence-scoring
// iterations with document refinement in between, merged reranking, claim
// verification, and the evaluation report with its plot-ready tables.

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "factver/config.hpp"
#include "factver/corpus.hpp"
#include "factver/doc_retrieval.hpp"
#include "factver/errors.hpp"
#include "factver/metrics.hpp"
#include "factver/records_io.hpp"
#include "factver/sent_retrieval.hpp"
#include "factver/types.hpp"
#include "factver/verification.hpp"

namespace factver {

// Half-up rounding to two decimals; used only when numbers are rendered.
inline double round_half_up_2dp(double x) {
  if (!std::isfinite(x)) return x;
  return x >= 0.0 ? std::floor(x * 100.0 + 0.5) / 100.0 : std::ceil(x * 100.0 - 0.5) / 100.0;
}

inline std::string present2(double x) {
  if (std::isnan(x)) return "nan";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", round_half_up_2dp(x));
  return buf;
}

struct PartReport {
  std::string name;
  size_t claims = 0;
  double share_pct = 0.0;  // of all evaluated claims
  double fever = std::nan("");
  double accuracy = std::nan("");
  // Final-stage retrieval quality inside the part; NaN where the part has
  // no gold evidence to score against (always the case for NEI).
  PRF doc{std::nan(""), std::nan(""), std::nan("")};
  PRF sent{std::nan(""), std::nan(""), std::nan("")};
};

struct PipelineReport {
  size_t claims = 0;
  PRF doc_coarse, doc_refined;
  PRF sent_iter1, sent_iter2, sent_merged;
  double fever = 0.0;
  double accuracy = 0.0;
  std::vector<PartReport> parts;
  ConfusionTable confusion;
  std::vector<Prediction> predictions;
  std::string text;  // rendered report, identical to out_dir/report.txt
};

namespace detail {

template <class F>
auto pipeline_stage(const char* name, F&& body) -> decltype(body()) {
  try {
    return body();
  } catch (const InputError&) {
    throw;  // caller-fixable input problems keep their own exit code
  } catch (const StageError&) {
    throw;
  } catch (const std::exception& e) {
    throw StageError(name, e.what());
  }
}

inline void write_text_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw InputError("cannot write " + path.string());
  os << content;
  if (!os) throw InputError("write failed for " + path.string());
}

inline std::string render_prf_row(const std::string& label, const PRF& m) {
  std::ostringstream os;
  os << "  " << label;
  for (size_t i = label.size(); i < 14; ++i) os << ' ';
  os << "P=" << present2(m.precision) << "  R=" << present2(m.recall)
     << "  F1=" << present2(m.f1) << "\n";
  return os.str();
}

}  // namespace detail

inline std::string render_report(const PipelineReport& r) {
  std::ostringstream os;
  os << "claim verification pipeline report\n";
  os << "claims evaluated: " << r.claims << "\n\n";

  os << "[1] document retrieval\n";
  os << detail::render_prf_row("coarse", r.doc_coarse);
  os << detail::render_prf_row("refined", r.doc_refined);
  os << "\n[2] sentence retrieval\n";
  os << detail::render_prf_row("iteration 1", r.sent_iter1);
  os << detail::render_prf_row("iteration 2", r.sent_iter2);
  os << detail::render_prf_row("merged", r.sent_merged);
  os << "\n[3] fever score\n  " << present2(r.fever) << "\n";
  os << "\n[4] label accuracy\n  " << present2(r.accuracy) << "\n";

  os << "\n[5] per-part breakdown\n";
  os << "  part     claims  share   fever   accuracy  doc F1  sentence F1\n";
  for (const PartReport& p : r.parts) {
    std::ostringstream row;
    row << "  " << p.name;
    for (size_t i = p.name.size(); i < 9; ++i) row << ' ';
    auto cell = [&row](const std::string& s, size_t width) {
      row << s;
      for (size_t i = s.size(); i < width; ++i) row << ' ';
    };
    cell(std::to_string(p.claims), 8);
    cell(present2(p.share_pct), 8);
    cell(present2(p.fever), 8);
    cell(present2(p.accuracy), 10);
    cell(present2(p.doc.f1), 8);
    row << present2(p.sent.f1) << "\n";
    os << row.str();
  }

  os << "\n[6] error confusion (% of total errors, rows gold, columns predicted)\n";
  long total_errors = r.confusion.errors();
  os << "  gold \\ predicted  SUPPORTS  REFUTES  NOT ENOUGH INFO\n";
  for (int g = 0; g < 3; ++g) {
    std::ostringstream row;
    std::string name = label_name(static_cast<Label>(g));
    row << "  " << name;
    for (size_t i = name.size(); i < 18; ++i) row << ' ';
    for (int p = 0; p < 3; ++p) {
      std::string cell;
      if (g == p)
        cell = "-";
      else if (total_errors == 0)
        cell = present2(0.0);
      else
        cell = present2(100.0 * static_cast<double>(r.confusion.counts[g][p]) /
                        static_cast<double>(total_errors));
      row << cell;
      for (size_t i = cell.size(); i < (p == 0 ? 10 : 9); ++i) row << ' ';
    }
    os << row.str() << "\n";
  }
  os << "  total errors: " << total_errors << "\n";
  return os.str();
}

namespace detail {

inline void write_tables(const std::filesystem::path& dir, const PipelineReport& r) {
  {
    std::ostringstream os;
    os << "stage\tprecision\trecall\tf1\n";
    auto row = [&os](const char* stage, const PRF& m) {
      os << stage << '\t' << present2(m.precision) << '\t' << present2(m.recall) << '\t'
         << present2(m.f1) << '\n';
    };
    row("doc_coarse", r.doc_coarse);
    row("doc_refined", r.doc_refined);
    row("sent_iter1", r.sent_iter1);
    row("sent_iter2", r.sent_iter2);
    row("sent_merged", r.sent_merged);
    write_text_file(dir / "retrieval.tsv", os.str());
  }
  {
    std::ostringstream os;
    os << "part\tclaims\tshare_pct\tfever\tlabel_accuracy\tdoc_precision\tdoc_recall\tdoc_f1"
       << "\tsent_precision\tsent_recall\tsent_f1\n";
    for (const PartReport& p : r.parts) {
      os << p.name << '\t' << p.claims << '\t' << present2(p.share_pct) << '\t'
         << present2(p.fever) << '\t' << present2(p.accuracy) << '\t'
         << present2(p.doc.precision) << '\t' << present2(p.doc.recall) << '\t'
         << present2(p.doc.f1) << '\t' << present2(p.sent.precision) << '\t'
         << present2(p.sent.recall) << '\t' << present2(p.sent.f1) << '\n';
    }
    write_text_file(dir / "per_part.tsv", os.str());
  }
  {
    std::ostringstream os;
    os << "gold\tpredicted\terror_pct\tcount\n";
    long total = r.confusion.errors();
    for (int g = 0; g < 3; ++g)
      for (int p = 0; p < 3; ++p) {
        if (g == p) continue;
        double pct = total == 0 ? 0.0
                               : 100.0 * static_cast<double>(r.confusion.counts[g][p]) /
                                     static_cast<double>(total);
        os << label_name(static_cast<Label>(g)) << '\t' << label_name(static_cast<Label>(p))
           << '\t' << present2(pct) << '\t' << r.confusion.counts[g][p] << '\n';
      }
    write_text_file(dir / "confusion.tsv", os.str());
  }
}

}  // namespace detail

inline PipelineReport run_pipeline(
    const PipelineConfig& cfg,
    const std::function<void(const std::string&)>& on_stage = nullptr) {
  auto stage_note = [&on_stage](const std::string& s) {
    if (on_stage) on_stage(s);
  };

  stage_note("load");
  CorpusIndex index;
  std::vector<ClaimRecord> claims;
  RetrieverModel retriever1, retriever2;
  VerifierModel verifier;
  detail::pipeline_stage("load", [&] {
    index = load_index(cfg.index);
    claims = load_claims(cfg.claims);
    retriever1 = RetrieverModel::load(cfg.retriever1);
    retriever2 = RetrieverModel::load(cfg.retriever2);
    verifier = VerifierModel::load(cfg.verifier);
    if (retriever1.iteration != 1)
      throw InputError(cfg.retriever1 + " is an iteration-" +
                       std::to_string(retriever1.iteration) +
                       " retriever; the first slot needs iteration 1");
    if (retriever2.iteration != 2)
      throw InputError(cfg.retriever2 + " is an iteration-" +
                       std::to_string(retriever2.iteration) +
                       " retriever; the second slot needs iteration 2");
    for (const ClaimRecord& c : claims)
      if (!c.has_label)
        throw InputError("claim " + std::to_string(c.claim_id) +
                         " has no label; the pipeline evaluates labeled claims");
    return 0;
  });

  stage_note("coarse_retrieval");
  std::map<int64_t, DocCandidateSet> coarse;
  detail::pipeline_stage("coarse_retrieval", [&] {
    for (const ClaimRecord& c : claims)
      coarse.emplace(c.claim_id,
                     coarse_retrieve(c.claim_id, c.text, index, static_cast<int>(cfg.k_tfidf)));
    return 0;
  });

  stage_note("sentence_iteration_1");
  std::map<int64_t, std::vector<ScoredSentence>> iter1;
  detail::pipeline_stage("sentence_iteration_1", [&] {
    for (const ClaimRecord& c : claims)
      iter1.emplace(c.claim_id, retriever1.retrieve_sentences(c.text, coarse.at(c.claim_id),
                                                              index, static_cast<int>(cfg.top_k)));
    return 0;
  });

  stage_note("refined_retrieval");
  std::map<int64_t, DocCandidateSet> refined;
  detail::pipeline_stage("refined_retrieval", [&] {
    for (const ClaimRecord& c : claims)
      refined.emplace(c.claim_id, refine_retrieve(c.claim_id, iter1.at(c.claim_id), index));
    return 0;
  });

  stage_note("sentence_iteration_2");
  std::map<int64_t, std::vector<ScoredSentence>> iter2;
  detail::pipeline_stage("sentence_iteration_2", [&] {
    for (const ClaimRecord& c : claims) {
      const std::vector<ScoredSentence>& first = iter1.at(c.claim_id);
      const std::string* top1 = nullptr;
      std::string top1_text;
      if (!first.empty()) {
        const Document* doc = index.get_document(first.front().doc_id);
        if (doc != nullptr && first.front().sentence_index >= 0 &&
            first.front().sentence_index < static_cast<int>(doc->sentences.size())) {
          top1_text = doc->sentences[first.front().sentence_index];
          top1 = &top1_text;
        }
      }
      iter2.emplace(c.claim_id,
                    retriever2.retrieve_sentences(c.text, refined.at(c.claim_id), index,
                                                  static_cast<int>(cfg.top_k), top1));
    }
    return 0;
  });

  stage_note("rerank_merge");
  std::map<int64_t, std::vector<ScoredSentence>> merged;
  detail::pipeline_stage("rerank_merge", [&] {
    for (const ClaimRecord& c : claims)
      merged.emplace(c.claim_id, rerank_merge(iter1.at(c.claim_id), iter2.at(c.claim_id)));
    return 0;
  });

  stage_note("verification");
  PipelineReport report;
  detail::pipeline_stage("verification", [&] {
    for (const ClaimRecord& c : claims) {
      EvidenceBundle bundle = make_bundle(c, merged.at(c.claim_id), index, false);
      VerificationOutput out = verifier.verify_claim(bundle, index);
      Prediction p;
      p.claim_id = c.claim_id;
      p.predicted_label = out.predicted_label;
      for (const EvidenceItem& e : bundle.evidences)
        p.evidence.push_back({e.doc_id, e.sentence_index});
      p.node_confidences = out.node_confidences;
      report.predictions.push_back(std::move(p));
    }
    return 0;
  });

  stage_note("evaluation");
  detail::pipeline_stage("evaluation", [&] {
    report.claims = claims.size();
    report.doc_coarse = doc_metrics(coarse, claims);
    report.doc_refined = doc_metrics(refined, claims);
    report.sent_iter1 = sentence_metrics(iter1, claims);
    report.sent_iter2 = sentence_metrics(iter2, claims);
    report.sent_merged = sentence_metrics(merged, claims);
    report.fever = fever_score(report.predictions, claims);
    report.accuracy = label_accuracy(report.predictions, claims);
    report.confusion = confusion_table(report.predictions, claims);

    std::map<int64_t, const ClaimRecord*> claim_by_id;
    for (const ClaimRecord& c : claims) claim_by_id.emplace(c.claim_id, &c);
    std::map<int64_t, const Prediction*> pred_by_id;
    for (const Prediction& p : report.predictions) pred_by_id.emplace(p.claim_id, &p);

    for (const SplitPart& part : partition_dev(claims)) {
      PartReport pr;
      pr.name = part.name;
      pr.claims = part.claim_ids.size();
      pr.share_pct = claims.empty()
                         ? 0.0
                         : 100.0 * static_cast<double>(part.claim_ids.size()) /
                               static_cast<double>(claims.size());
      if (!part.claim_ids.empty()) {
        std::vector<ClaimRecord> gold_part;
        std::vector<Prediction> preds_part;
        std::map<int64_t, DocCandidateSet> docs_part;
        std::map<int64_t, std::vector<ScoredSentence>> sents_part;
        bool any_groups = false;
        for (int64_t id : part.claim_ids) {
          const ClaimRecord& c = *claim_by_id.at(id);
          gold_part.push_back(c);
          preds_part.push_back(*pred_by_id.at(id));
          docs_part.emplace(id, refined.at(id));
          sents_part.emplace(id, merged.at(id));
          if (!c.evidence_groups.empty()) any_groups = true;
        }
        pr.fever = fever_score(preds_part, gold_part);
        pr.accuracy = label_accuracy(preds_part, gold_part);
        if (any_groups) {
          pr.doc = doc_metrics(docs_part, gold_part);
          pr.sent = sentence_metrics(sents_part, gold_part);
        }
      }
      report.parts.push_back(std::move(pr));
    }
    return 0;
  });

  stage_note("report");
  detail::pipeline_stage("report", [&] {
    report.text = render_report(report);
    std::filesystem::path dir(cfg.out_dir);
    std::filesystem::create_directories(dir);
    detail::write_text_file(dir / "report.txt", report.text);
    detail::write_tables(dir, report);
    save_predictions((dir / "predictions.jsonl").string(), report.predictions);
    return 0;
  });

  return report;
}

}  // namespace factver
