// Command line front end for the fact verification pipeline. Every
// subcommand reads and writes plain files so the stages can be run one at a
// time or end to end through run-pipeline.

#include <cstdio>
#include <functional>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "factver/config.hpp"
#include "factver/corpus.hpp"
#include "factver/doc_retrieval.hpp"
#include "factver/errors.hpp"
#include "factver/metrics.hpp"
#include "factver/pipeline.hpp"
#include "factver/records_io.hpp"
#include "factver/sent_retrieval.hpp"
#include "factver/verification.hpp"

namespace {

using namespace factver;

// Shared encoder-size flags so fixture-scale models can be trained quickly.
struct EncoderFlags {
  long hidden_dim = 64;
  long layers = 2;
  long heads = 4;
  long max_positions = 512;

  void add_to(CLI::App* cmd) {
    cmd->add_option("--hidden-dim", hidden_dim, "encoder hidden size");
    cmd->add_option("--enc-layers", layers, "encoder layer count");
    cmd->add_option("--heads", heads, "attention heads");
    cmd->add_option("--max-positions", max_positions, "longest encodable sequence");
  }

  TransformerConfig to_config() const {
    TransformerConfig cfg;
    cfg.hidden_dim = static_cast<int>(hidden_dim);
    cfg.layers = static_cast<int>(layers);
    cfg.heads = static_cast<int>(heads);
    cfg.max_positions = static_cast<int>(max_positions);
    return cfg;
  }
};

int cmd_ingest(const std::vector<std::string>& dumps, const std::string& out) {
  CorpusIndex index = ingest_dump(dumps);
  save_index(out, index);
  std::cout << "indexed " << index.documents.size() << " documents -> " << out << "\n";
  return 0;
}

int cmd_retrieve_docs(const std::string& index_path, const std::string& claims_path,
                      const std::string& stage, const std::string& iter1_path, long k_tfidf,
                      const std::string& out) {
  CorpusIndex index = load_index(index_path);
  std::vector<ClaimRecord> claims = load_claims(claims_path);
  std::map<int64_t, DocCandidateSet> sets;
  if (stage == "coarse") {
    for (const ClaimRecord& c : claims)
      sets.emplace(c.claim_id, coarse_retrieve(c.claim_id, c.text, index,
                                               static_cast<int>(k_tfidf)));
  } else {
    if (iter1_path.empty())
      throw InputError("--stage refined needs --iter1 (iteration-1 scored sentences)");
    auto iter1 = load_scored_sentences(iter1_path);
    for (const ClaimRecord& c : claims) {
      auto it = iter1.find(c.claim_id);
      static const std::vector<ScoredSentence> kNone;
      sets.emplace(c.claim_id,
                   refine_retrieve(c.claim_id, it == iter1.end() ? kNone : it->second, index));
    }
  }
  save_doc_candidates(out, sets);
  std::cout << stage << " candidates for " << sets.size() << " claims -> " << out << "\n";
  return 0;
}

// Resolves each claim's best iteration-1 sentence to its text, so iteration
// 2 can condition on it.
std::map<int64_t, std::string> top1_texts(const std::string& path, const CorpusIndex& index) {
  std::map<int64_t, std::string> out;
  for (const auto& [claim_id, sents] : load_scored_sentences(path)) {
    if (sents.empty()) continue;
    const ScoredSentence& best = sents.front();
    const Document* doc = index.get_document(best.doc_id);
    if (doc == nullptr || best.sentence_index < 0 ||
        best.sentence_index >= static_cast<int>(doc->sentences.size()))
      throw InputError(path + ": claim " + std::to_string(claim_id) +
                       " names unknown sentence " + best.doc_id + ":" +
                       std::to_string(best.sentence_index));
    out.emplace(claim_id, doc->sentences[best.sentence_index]);
  }
  return out;
}

int cmd_retrieve_sents(const std::string& index_path, const std::string& claims_path,
                       const std::string& docs_path, const std::string& model_path,
                       long iteration, const std::string& iter1_top1_path, long top_k,
                       const std::string& out) {
  CorpusIndex index = load_index(index_path);
  std::vector<ClaimRecord> claims = load_claims(claims_path);
  auto candidates = load_doc_candidates(docs_path);
  RetrieverModel model = RetrieverModel::load(model_path);
  if (model.iteration != iteration)
    throw InputError(model_path + " was trained for iteration " +
                     std::to_string(model.iteration) + ", not " + std::to_string(iteration));
  std::map<int64_t, std::string> top1;
  if (!iter1_top1_path.empty()) top1 = top1_texts(iter1_top1_path, index);
  if (iteration == 2 && iter1_top1_path.empty())
    throw InputError("iteration 2 scoring needs --iter1-top1");

  std::map<int64_t, std::vector<ScoredSentence>> scored;
  for (const ClaimRecord& c : claims) {
    auto cit = candidates.find(c.claim_id);
    static const DocCandidateSet kEmpty;
    const DocCandidateSet& docs = cit == candidates.end() ? kEmpty : cit->second;
    const std::string* context = nullptr;
    auto tit = top1.find(c.claim_id);
    if (tit != top1.end()) context = &tit->second;
    scored.emplace(c.claim_id, model.retrieve_sentences(c.text, docs, index,
                                                        static_cast<int>(top_k), context));
  }
  save_scored_sentences(out, scored);
  std::cout << "scored sentences for " << scored.size() << " claims -> " << out << "\n";
  return 0;
}

int cmd_merge_sents(const std::string& iter1_path, const std::string& iter2_path,
                    const std::string& out) {
  auto iter1 = load_scored_sentences(iter1_path);
  auto iter2 = load_scored_sentences(iter2_path);
  std::map<int64_t, std::vector<ScoredSentence>> merged;
  static const std::vector<ScoredSentence> kNone;
  for (const auto& [id, sents] : iter1) {
    auto it = iter2.find(id);
    merged.emplace(id, rerank_merge(sents, it == iter2.end() ? kNone : it->second));
  }
  for (const auto& [id, sents] : iter2)
    if (!iter1.count(id)) merged.emplace(id, rerank_merge(kNone, sents));
  save_scored_sentences(out, merged);
  std::cout << "merged evidence for " << merged.size() << " claims -> " << out << "\n";
  return 0;
}

int cmd_train_retriever(const std::string& config_path, const std::string& index_path,
                        const std::string& claims_path, const std::string& docs_path,
                        long iteration, const std::string& iter1_path,
                        const EncoderFlags& enc, const std::string& out) {
  RetrieverConfig cfg = RetrieverConfig::from_file(config_path);
  CorpusIndex index = load_index(index_path);
  std::vector<ClaimRecord> claims = load_claims(claims_path);
  auto candidates = load_doc_candidates(docs_path);
  std::map<int64_t, std::vector<ScoredSentence>> iter1;
  if (!iter1_path.empty()) iter1 = load_scored_sentences(iter1_path);
  if (iteration == 2 && iter1_path.empty())
    throw InputError("training an iteration-2 retriever needs --iter1-top1");

  RetrieverModel model = train_retriever(
      claims, index, candidates, cfg, static_cast<int>(iteration),
      iter1_path.empty() ? nullptr : &iter1, enc.to_config(),
      [](long step, double loss) {
        std::fprintf(stderr, "step %ld loss %.4f\n", step, loss);
      });
  model.save(out);
  std::cout << "trained iteration-" << iteration << " retriever -> " << out << "\n";
  return 0;
}

std::vector<EvidenceBundle> bundles_from_files(const std::vector<ClaimRecord>& claims,
                                               const std::string& evidence_path,
                                               const CorpusIndex& index, bool attach_labels) {
  auto evidence = load_scored_sentences(evidence_path);
  std::vector<EvidenceBundle> bundles;
  static const std::vector<ScoredSentence> kNone;
  for (const ClaimRecord& c : claims) {
    auto it = evidence.find(c.claim_id);
    bundles.push_back(make_bundle(c, it == evidence.end() ? kNone : it->second, index,
                                  attach_labels));
  }
  return bundles;
}

int cmd_train_verifier(const std::string& config_path, const std::string& index_path,
                       const std::string& claims_path, const std::string& evidence_path,
                       const std::string& dev_claims_path, const std::string& dev_evidence_path,
                       const EncoderFlags& enc, const std::string& out) {
  VerifierConfig cfg = VerifierConfig::from_file(config_path);
  CorpusIndex index = load_index(index_path);
  std::vector<ClaimRecord> claims = load_claims(claims_path);
  std::vector<EvidenceBundle> train = bundles_from_files(claims, evidence_path, index, true);

  std::vector<EvidenceBundle> dev;
  std::vector<ClaimRecord> dev_gold;
  if (dev_claims_path.empty() != dev_evidence_path.empty())
    throw InputError("--dev-claims and --dev-evidence come as a pair");
  if (!dev_claims_path.empty()) {
    dev_gold = load_claims(dev_claims_path);
    dev = bundles_from_files(dev_gold, dev_evidence_path, index, false);
  }

  VerifierModel model =
      train_verifier(train, dev, dev_gold, index, cfg, enc.to_config(),
                     [](long restart, long step, double loss) {
                       std::fprintf(stderr, "restart %ld step %ld loss %.4f\n", restart, step,
                                    loss);
                     });
  model.save(out);
  std::cout << "trained verifier -> " << out << "\n";
  return 0;
}

int cmd_verify(const std::string& index_path, const std::string& claims_path,
               const std::string& evidence_path, const std::string& model_path,
               const std::string& out) {
  CorpusIndex index = load_index(index_path);
  std::vector<ClaimRecord> claims = load_claims(claims_path);
  VerifierModel model = VerifierModel::load(model_path);
  std::vector<EvidenceBundle> bundles = bundles_from_files(claims, evidence_path, index, false);
  std::vector<Prediction> preds;
  for (const EvidenceBundle& b : bundles) {
    VerificationOutput o = model.verify_claim(b, index);
    Prediction p;
    p.claim_id = b.claim_id;
    p.predicted_label = o.predicted_label;
    for (const EvidenceItem& e : b.evidences) p.evidence.push_back({e.doc_id, e.sentence_index});
    p.node_confidences = o.node_confidences;
    preds.push_back(std::move(p));
  }
  save_predictions(out, preds);
  std::cout << "verified " << preds.size() << " claims -> " << out << "\n";
  return 0;
}

int cmd_evaluate(const std::string& predictions_path, const std::string& gold_path,
                 bool per_part) {
  std::vector<ClaimRecord> gold = load_claims(gold_path);
  std::vector<Prediction> preds;
  for (auto& [id, p] : load_predictions(predictions_path)) preds.push_back(std::move(p));
  std::cout << "fever score: " << present2(fever_score(preds, gold)) << "\n";
  std::cout << "label accuracy: " << present2(label_accuracy(preds, gold)) << "\n";
  if (per_part) {
    std::map<int64_t, const ClaimRecord*> by_id;
    for (const ClaimRecord& c : gold) by_id.emplace(c.claim_id, &c);
    std::map<int64_t, const Prediction*> pred_by_id;
    for (const Prediction& p : preds) pred_by_id.emplace(p.claim_id, &p);
    std::cout << "part\tclaims\tfever\tlabel_accuracy\n";
    for (const SplitPart& part : partition_dev(gold)) {
      if (part.claim_ids.empty()) {
        std::cout << part.name << "\t0\tnan\tnan\n";
        continue;
      }
      std::vector<ClaimRecord> g;
      std::vector<Prediction> p;
      for (int64_t id : part.claim_ids) {
        g.push_back(*by_id.at(id));
        auto it = pred_by_id.find(id);
        if (it != pred_by_id.end()) p.push_back(*it->second);
      }
      std::cout << part.name << '\t' << part.claim_ids.size() << '\t'
                << present2(fever_score(p, g)) << '\t' << present2(label_accuracy(p, g))
                << "\n";
    }
  }
  return 0;
}

int cmd_split_dev(const std::string& claims_path, const std::string& out) {
  std::vector<ClaimRecord> claims = load_claims(claims_path);
  std::vector<SplitPart> parts = partition_dev(claims);
  std::string table = "part\tclaims\tshare_pct\n";
  for (const SplitPart& p : parts) {
    double share = claims.empty() ? 0.0
                                  : 100.0 * static_cast<double>(p.claim_ids.size()) /
                                        static_cast<double>(claims.size());
    table += p.name + "\t" + std::to_string(p.claim_ids.size()) + "\t" + present2(share) + "\n";
  }
  std::cout << table;
  if (!out.empty()) detail::write_text_file(out, table);
  return 0;
}

int cmd_run_pipeline(const std::string& config_path) {
  PipelineConfig cfg = PipelineConfig::from_file(config_path);
  PipelineReport report = run_pipeline(cfg, [](const std::string& stage) {
    std::fprintf(stderr, "stage: %s\n", stage.c_str());
  });
  std::cout << report.text;
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"iterative multi-view fact extraction and claim verification"};
  app.require_subcommand(1);

  // ingest
  std::vector<std::string> dumps;
  std::string ingest_out;
  CLI::App* ingest = app.add_subcommand("ingest", "build a corpus index from dump files");
  ingest->add_option("--dump", dumps, "dump files")->required()->expected(-1);
  ingest->add_option("--out", ingest_out, "index output path")->required();

  // retrieve-docs
  std::string rd_index, rd_claims, rd_stage = "coarse", rd_iter1, rd_out;
  long rd_k = 5;
  CLI::App* rdocs = app.add_subcommand("retrieve-docs", "retrieve candidate documents");
  rdocs->add_option("--index", rd_index)->required();
  rdocs->add_option("--claims", rd_claims)->required();
  rdocs->add_option("--stage", rd_stage, "coarse or refined")
      ->check(CLI::IsMember({"coarse", "refined"}));
  rdocs->add_option("--iter1", rd_iter1, "iteration-1 scored sentences (refined stage)");
  rdocs->add_option("--k-tfidf", rd_k, "similarity candidates in the coarse stage");
  rdocs->add_option("--out", rd_out)->required();

  // retrieve-sents
  std::string rs_index, rs_claims, rs_docs, rs_model, rs_top1, rs_out;
  long rs_iteration = 1, rs_top_k = 5;
  CLI::App* rsents = app.add_subcommand("retrieve-sents", "score and rank evidence sentences");
  rsents->add_option("--index", rs_index)->required();
  rsents->add_option("--claims", rs_claims)->required();
  rsents->add_option("--docs", rs_docs, "candidate documents")->required();
  rsents->add_option("--model", rs_model, "retriever checkpoint")->required();
  rsents->add_option("--iteration", rs_iteration)->check(CLI::IsMember({1, 2}))->required();
  rsents->add_option("--iter1-top1", rs_top1, "iteration-1 scored sentences for context");
  rsents->add_option("--top-k", rs_top_k);
  rsents->add_option("--out", rs_out)->required();

  // merge-sents (convenience for running the stages by hand; run-pipeline
  // performs the same merge internally)
  std::string ms_iter1, ms_iter2, ms_out;
  CLI::App* msents = app.add_subcommand("merge-sents", "rerank and merge the two iterations");
  msents->add_option("--iter1", ms_iter1)->required();
  msents->add_option("--iter2", ms_iter2)->required();
  msents->add_option("--out", ms_out)->required();

  // train-retriever
  std::string tr_config, tr_index, tr_claims, tr_docs, tr_iter1, tr_out;
  long tr_iteration = 1;
  EncoderFlags tr_enc;
  CLI::App* tret = app.add_subcommand("train-retriever", "train a sentence retriever");
  tret->add_option("--config", tr_config)->required();
  tret->add_option("--index", tr_index)->required();
  tret->add_option("--claims", tr_claims)->required();
  tret->add_option("--docs", tr_docs, "candidate documents")->required();
  tret->add_option("--iteration", tr_iteration)->check(CLI::IsMember({1, 2}))->required();
  tret->add_option("--iter1-top1", tr_iter1, "iteration-1 scored sentences (iteration 2)");
  tr_enc.add_to(tret);
  tret->add_option("--out", tr_out)->required();

  // train-verifier
  std::string tv_config, tv_index, tv_claims, tv_evidence, tv_dev_claims, tv_dev_evidence,
      tv_out;
  EncoderFlags tv_enc;
  CLI::App* tver = app.add_subcommand("train-verifier", "train the claim verifier");
  tver->add_option("--config", tv_config)->required();
  tver->add_option("--index", tv_index)->required();
  tver->add_option("--claims", tv_claims, "labeled training claims")->required();
  tver->add_option("--evidence", tv_evidence, "scored sentences for training claims")
      ->required();
  tver->add_option("--dev-claims", tv_dev_claims, "labeled dev claims for restart selection");
  tver->add_option("--dev-evidence", tv_dev_evidence, "scored sentences for dev claims");
  tv_enc.add_to(tver);
  tver->add_option("--out", tv_out)->required();

  // verify
  std::string v_index, v_claims, v_evidence, v_model, v_out;
  CLI::App* verify = app.add_subcommand("verify", "predict labels for claims with evidence");
  verify->add_option("--index", v_index)->required();
  verify->add_option("--claims", v_claims)->required();
  verify->add_option("--evidence", v_evidence, "scored sentences")->required();
  verify->add_option("--model", v_model, "verifier checkpoint")->required();
  verify->add_option("--out", v_out)->required();

  // evaluate
  std::string e_predictions, e_gold;
  bool e_per_part = false;
  CLI::App* evaluate = app.add_subcommand("evaluate", "score predictions against gold claims");
  evaluate->add_option("--predictions", e_predictions)->required();
  evaluate->add_option("--gold", e_gold)->required();
  evaluate->add_flag("--per-part", e_per_part, "also break down by dev part");

  // split-dev
  std::string sd_claims, sd_out;
  CLI::App* split = app.add_subcommand("split-dev", "partition labeled claims into dev parts");
  split->add_option("--claims", sd_claims)->required();
  split->add_option("--out", sd_out, "optional table output path");

  // run-pipeline
  std::string rp_config;
  CLI::App* runp = app.add_subcommand("run-pipeline", "run retrieval, verification, evaluation");
  runp->add_option("--config", rp_config)->required();

  try {
    app.parse(argc, argv);
    if (*ingest) return cmd_ingest(dumps, ingest_out);
    if (*rdocs) return cmd_retrieve_docs(rd_index, rd_claims, rd_stage, rd_iter1, rd_k, rd_out);
    if (*rsents)
      return cmd_retrieve_sents(rs_index, rs_claims, rs_docs, rs_model, rs_iteration, rs_top1,
                                rs_top_k, rs_out);
    if (*msents) return cmd_merge_sents(ms_iter1, ms_iter2, ms_out);
    if (*tret)
      return cmd_train_retriever(tr_config, tr_index, tr_claims, tr_docs, tr_iteration, tr_iter1,
                                 tr_enc, tr_out);
    if (*tver)
      return cmd_train_verifier(tv_config, tv_index, tv_claims, tv_evidence, tv_dev_claims,
                                tv_dev_evidence, tv_enc, tv_out);
    if (*verify) return cmd_verify(v_index, v_claims, v_evidence, v_model, v_out);
    if (*evaluate) return cmd_evaluate(e_predictions, e_gold, e_per_part);
    if (*split) return cmd_split_dev(sd_claims, sd_out);
    if (*runp) return cmd_run_pipeline(rp_config);
    return 0;
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 1;
  } catch (const factver::StageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const factver::InputError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "unexpected error: " << e.what() << "\n";
    return 2;
  }
}
