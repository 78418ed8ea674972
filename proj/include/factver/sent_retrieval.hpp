#pragma once
// Sentence retrieval: scores every sentence of every candidate document in
// its intra-document context. Iteration 1 scores coarse candidates;
// iteration 2 re-scores refined candidates with the iteration-1 top-1
// sentence inserted as extra inter-document context. The two iterations'
// outputs are max-merged and capped at five evidence sentences.
//
// Sequence layout per document (iteration 2 adds the starred sentence):
//   [START] claim [SEP] top1* [SEP] title [SEP] s0 s1 ... [SEP]
// The claim is truncated to 64 tokens; all sentences share one sequence so
// each sentence is scored with its document as context.

#include <algorithm>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <random>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "factver/autodiff.hpp"
#include "factver/config.hpp"
#include "factver/corpus.hpp"
#include "factver/encoder.hpp"
#include "factver/errors.hpp"
#include "factver/layouts.hpp"
#include "factver/nn_blocks.hpp"
#include "factver/params.hpp"
#include "factver/tokens.hpp"
#include "factver/types.hpp"

namespace factver {

// Mean binary cross entropy over a batch of per-document score lists,
// normalized by the total sentence count (not per document), with
// probabilities clamped to [1e-7, 1 - 1e-7].
inline double retrieval_loss(const std::vector<std::vector<double>>& scores,
                             const std::vector<std::vector<double>>& labels) {
  if (scores.size() != labels.size())
    throw InputError("retrieval_loss: scores and labels disagree on document count");
  if (scores.empty()) throw InputError("retrieval_loss: empty batch");
  const double eps = 1e-7;
  double acc = 0.0;
  long total = 0;
  for (size_t i = 0; i < scores.size(); ++i) {
    if (scores[i].size() != labels[i].size())
      throw InputError("retrieval_loss: scores and labels disagree on sentence count");
    for (size_t j = 0; j < scores[i].size(); ++j) {
      double y = labels[i][j];
      if (y != 0.0 && y != 1.0) throw InputError("retrieval_loss: labels must be 0 or 1");
      double p = std::min(1.0 - eps, std::max(eps, scores[i][j]));
      acc -= y * std::log(p) + (1.0 - y) * std::log(1.0 - p);
      ++total;
    }
  }
  if (total == 0) throw InputError("retrieval_loss: batch contains no sentences");
  return acc / static_cast<double>(total);
}

// Max-score merge of the two iterations' candidates, capped at the
// five-sentence evidence budget.
inline std::vector<ScoredSentence> rerank_merge(const std::vector<ScoredSentence>& iter1,
                                                const std::vector<ScoredSentence>& iter2) {
  std::map<std::pair<std::string, int>, ScoredSentence> best;
  auto absorb = [&best](const std::vector<ScoredSentence>& list) {
    for (const ScoredSentence& s : list) {
      auto key = std::make_pair(s.doc_id, s.sentence_index);
      auto it = best.find(key);
      if (it == best.end())
        best.emplace(key, s);
      else if (s.score > it->second.score)
        it->second = s;
    }
  };
  absorb(iter1);
  absorb(iter2);
  std::vector<ScoredSentence> out;
  out.reserve(best.size());
  for (const auto& [key, s] : best) out.push_back(s);
  std::sort(out.begin(), out.end(), scored_before);
  if (out.size() > 5) out.resize(5);
  return out;
}

// Sentence-level precision / recall / F1 against gold groups; recall counts
// a claim when some gold group is fully inside the predicted set, precision
// is micro over predicted sentences. NOT ENOUGH INFO claims are excluded.
inline PRF sentence_metrics(const std::map<int64_t, std::vector<ScoredSentence>>& predictions,
                            const std::vector<ClaimRecord>& gold) {
  long considered = 0, recalled = 0, retrieved = 0, relevant_retrieved = 0;
  for (const ClaimRecord& claim : gold) {
    if (claim.evidence_groups.empty()) continue;
    ++considered;
    std::set<EvidenceRef> predicted;
    auto it = predictions.find(claim.claim_id);
    if (it != predictions.end())
      for (const ScoredSentence& s : it->second) predicted.insert({s.doc_id, s.sentence_index});
    std::set<EvidenceRef> gold_sents;
    bool covered = false;
    for (const auto& group : claim.evidence_groups) {
      bool all = true;
      for (const EvidenceRef& e : group) {
        gold_sents.insert(e);
        if (!predicted.count(e)) all = false;
      }
      if (all) covered = true;
    }
    if (covered) ++recalled;
    retrieved += static_cast<long>(predicted.size());
    for (const EvidenceRef& e : predicted)
      if (gold_sents.count(e)) ++relevant_retrieved;
  }
  if (considered == 0)
    throw InputError("sentence_metrics: no gold claims carry evidence groups");
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

// Differentiable scores for the scoreable sentences of one document.
// Sentences that tokenize to nothing have no first token to represent and
// are skipped here (the inference wrapper reports them with score 0).
struct DocScores {
  std::vector<int> sentence_of_row;  // row r of probs ↔ this sentence index
  Var probs;                         // (rows × 1) probabilities
};

class RetrieverModel {
 public:
  std::unique_ptr<ParamStore> store = std::make_unique<ParamStore>();
  Vocabulary vocab;
  TransformerConfig enc_cfg;
  std::unique_ptr<TransformerEncoder> encoder;
  int iteration = 1;
  int max_len = 512;
  int stride = 128;
  int claim_max_tokens = 64;

  static RetrieverModel create(Vocabulary vocab, TransformerConfig enc_cfg, int iteration,
                               long seed) {
    RetrieverModel m;
    m.vocab = std::move(vocab);
    m.enc_cfg = enc_cfg;
    m.enc_cfg.vocab_size = m.vocab.size();
    m.iteration = iteration;
    m.encoder = std::make_unique<TransformerEncoder>(*m.store, m.enc_cfg);
    std::mt19937_64 rng(static_cast<uint64_t>(seed));
    m.encoder->init_params(rng);
    const int d = m.enc_cfg.hidden_dim;
    init_align_param(*m.store, "ret.align.ts", d, rng);
    init_align_param(*m.store, "ret.align.cts", d, rng);
    init_mlp_head(*m.store, "ret.mlp", d, rng);
    return m;
  }

  TokenSequence build_sequence(const std::string& claim, const Document& doc,
                               const std::string* top1) const {
    return build_doc_sequence(vocab, claim, claim_max_tokens, doc, top1);
  }

  // Scores one document's sentences on the caller's tape. Each window is
  // encoded at most once; every representation is the hidden state of the
  // unit's first token in its first containing window.
  DocScores score_document_on_tape(Tape& tape, const Encoder& enc, const std::string& claim,
                                   const Document& doc, const std::string* top1) const {
    TokenSequence seq = build_sequence(claim, doc, top1);
    std::vector<TokenSequence> windows = split_windows(seq, max_len, stride);
    std::vector<Var> encoded(windows.size());
    auto window_hidden = [&](int w) {
      if (!encoded[w].valid()) encoded[w] = enc.encode(tape, windows[w]);
      return encoded[w];
    };
    auto unit_state = [&](UnitKey key) {
      int w = window_of_unit(windows, key);
      return tape.row(window_hidden(w), unit_first_pos(windows[w], key));
    };
    Var e_c = unit_state(UnitKey::claim());
    Var e_t = unit_state(UnitKey::title());
    Var w_ts = bind_param(tape, *store, "ret.align.ts");
    Var w_cts = bind_param(tape, *store, "ret.align.cts");
    DocScores out;
    std::vector<Var> rows;
    for (size_t i = 0; i < doc.sentences.size(); ++i) {
      UnitKey key = UnitKey::sentence(static_cast<int>(i));
      int w = -1;
      for (size_t wi = 0; wi < windows.size(); ++wi) {
        auto it = windows[wi].origin_spans.find(key);
        if (it != windows[wi].origin_spans.end() && it->second.len > 0) {
          w = static_cast<int>(wi);
          break;
        }
      }
      if (w < 0) continue;  // empty sentence, nothing to represent
      Var e_s = tape.row(window_hidden(w), unit_first_pos(windows[w], key));
      Var e_ts = align(tape, e_t, e_s, w_ts);
      Var e_cts = align(tape, e_c, e_ts, w_cts);
      rows.push_back(tape.sigmoid_op(mlp_logit(tape, *store, "ret.mlp", e_cts)));
      out.sentence_of_row.push_back(static_cast<int>(i));
    }
    if (!rows.empty()) out.probs = tape.vstack(rows);
    return out;
  }

  // Inference scores for every sentence of the document.
  std::vector<ScoredSentence> score_document(const std::string& claim, const Document& doc,
                                             const std::string* top1 = nullptr) const {
    Tape tape;
    DocScores ds = score_document_on_tape(tape, *encoder, claim, doc, top1);
    std::vector<ScoredSentence> out(doc.sentences.size());
    for (size_t i = 0; i < out.size(); ++i)
      out[i] = {doc.doc_id, static_cast<int>(i), 0.0, iteration};
    if (ds.probs.valid()) {
      const Mat& p = tape.val(ds.probs);
      for (size_t r = 0; r < ds.sentence_of_row.size(); ++r)
        out[ds.sentence_of_row[r]].score = p.at(static_cast<int>(r), 0);
    }
    return out;
  }

  // Scores all sentences of all candidate documents and keeps the top_k in
  // deterministic order. Candidate documents with no sentences contribute
  // nothing.
  std::vector<ScoredSentence> retrieve_sentences(const std::string& claim,
                                                 const DocCandidateSet& docs,
                                                 const CorpusIndex& index, int top_k = 5,
                                                 const std::string* top1 = nullptr) const {
    if (top_k < 1) throw InputError("retrieve_sentences: top_k must be >= 1");
    std::vector<ScoredSentence> all;
    for (const DocCandidate& cand : docs.docs) {
      const Document* doc = index.get_document(cand.doc_id);
      if (doc == nullptr)
        throw InputError("retrieve_sentences: candidate document '" + cand.doc_id +
                         "' is not in the corpus");
      if (doc->sentences.empty()) continue;
      std::vector<ScoredSentence> scored = score_document(claim, *doc, top1);
      all.insert(all.end(), scored.begin(), scored.end());
    }
    std::sort(all.begin(), all.end(), scored_before);
    if (static_cast<int>(all.size()) > top_k) all.resize(top_k);
    return all;
  }

  void save(const std::string& path) const {
    Checkpoint ck;
    ck.meta["kind"] = 1;
    ck.meta["hidden_dim"] = enc_cfg.hidden_dim;
    ck.meta["layers"] = enc_cfg.layers;
    ck.meta["heads"] = enc_cfg.heads;
    ck.meta["max_positions"] = enc_cfg.max_positions;
    ck.meta["vocab_size"] = enc_cfg.vocab_size;
    ck.meta["max_len"] = max_len;
    ck.meta["stride"] = stride;
    ck.meta["claim_max_tokens"] = claim_max_tokens;
    ck.meta["iteration"] = iteration;
    ck.vocab = vocab.token_list();
    for (const auto& [name, p] : store->params) ck.tensors.emplace(name, p.value);
    save_checkpoint(path, ck);
  }

  static RetrieverModel load(const std::string& path) {
    Checkpoint ck = load_checkpoint(path);
    if (!ck.meta.count("kind") || ck.meta.at("kind") != 1)
      throw InputError(path + " is not a sentence retriever checkpoint");
    TransformerConfig cfg;
    cfg.hidden_dim = static_cast<int>(ck.meta.at("hidden_dim"));
    cfg.layers = static_cast<int>(ck.meta.at("layers"));
    cfg.heads = static_cast<int>(ck.meta.at("heads"));
    cfg.max_positions = static_cast<int>(ck.meta.at("max_positions"));
    RetrieverModel m = create(Vocabulary::from_token_list(ck.vocab), cfg,
                              static_cast<int>(ck.meta.at("iteration")), /*seed=*/0);
    m.max_len = static_cast<int>(ck.meta.at("max_len"));
    m.stride = static_cast<int>(ck.meta.at("stride"));
    m.claim_max_tokens = static_cast<int>(ck.meta.at("claim_max_tokens"));
    if (static_cast<int>(ck.meta.at("vocab_size")) != m.vocab.size())
      throw InputError(path + ": vocab_size disagrees with the stored vocabulary");
    adopt_checkpoint_tensors(*m.store, ck, path);
    return m;
  }
};

// One (claim, document) training pair with per-sentence 0/1 labels.
struct RetrievalExample {
  const ClaimRecord* claim = nullptr;
  const Document* doc = nullptr;
  std::string top1_text;  // iteration 2 context sentence; empty = absent
  bool has_top1 = false;
  std::map<int, double> gold_sentences;  // sentence index -> 1.0
};

namespace detail {

inline std::vector<RetrievalExample> build_retrieval_examples(
    const std::vector<ClaimRecord>& claims, const CorpusIndex& index,
    const std::map<int64_t, DocCandidateSet>& candidates, long doc_cap, int iteration,
    const std::map<int64_t, std::vector<ScoredSentence>>* iter1_candidates) {
  std::vector<RetrievalExample> examples;
  for (const ClaimRecord& claim : claims) {
    std::set<EvidenceRef> gold_flat;
    std::set<std::string> gold_docs;
    for (const auto& group : claim.evidence_groups)
      for (const EvidenceRef& e : group) {
        if (index.get_document(e.doc_id) == nullptr) continue;
        gold_flat.insert(e);
        gold_docs.insert(e.doc_id);
      }
    std::vector<std::string> train_docs(gold_docs.begin(), gold_docs.end());
    if (auto it = candidates.find(claim.claim_id); it != candidates.end())
      for (const DocCandidate& c : it->second.docs) {
        if (static_cast<long>(train_docs.size()) >= doc_cap) break;
        if (gold_docs.count(c.doc_id) || index.get_document(c.doc_id) == nullptr) continue;
        train_docs.push_back(c.doc_id);
      }
    if (static_cast<long>(train_docs.size()) > doc_cap) train_docs.resize(doc_cap);

    std::string top1_text;
    bool has_top1 = false;
    if (iteration == 2 && iter1_candidates != nullptr) {
      auto it = iter1_candidates->find(claim.claim_id);
      if (it != iter1_candidates->end() && !it->second.empty()) {
        const ScoredSentence& top1 = it->second.front();
        const Document* doc = index.get_document(top1.doc_id);
        if (doc != nullptr && top1.sentence_index >= 0 &&
            top1.sentence_index < static_cast<int>(doc->sentences.size())) {
          top1_text = doc->sentences[top1.sentence_index];
          has_top1 = !top1_text.empty();
        }
      }
    }

    for (const std::string& doc_id : train_docs) {
      const Document* doc = index.get_document(doc_id);
      bool scoreable = false;
      for (const std::string& s : doc->sentences)
        if (!tokenize_terms(s).empty()) {
          scoreable = true;
          break;
        }
      if (!scoreable) continue;
      RetrievalExample ex;
      ex.claim = &claim;
      ex.doc = doc;
      ex.top1_text = top1_text;
      ex.has_top1 = has_top1;
      for (const EvidenceRef& e : gold_flat)
        if (e.doc_id == doc_id) ex.gold_sentences[e.sentence_index] = 1.0;
      examples.push_back(std::move(ex));
    }
  }
  return examples;
}

}  // namespace detail

// Trains a sentence retriever. Training documents per claim are the gold
// evidence documents plus retrieved candidates up to doc_cap; sentence
// labels are 1 exactly when the sentence appears in some gold group, so
// NOT ENOUGH INFO claims contribute all-negative documents. Iteration 2
// trains with the iteration-1 model's predicted top-1 sentence as context,
// matching what it will see at inference.
inline RetrieverModel train_retriever(
    const std::vector<ClaimRecord>& claims, const CorpusIndex& index,
    const std::map<int64_t, DocCandidateSet>& candidates, const RetrieverConfig& cfg,
    int iteration, const std::map<int64_t, std::vector<ScoredSentence>>* iter1_candidates,
    TransformerConfig enc_cfg = {},
    const std::function<void(long step, double loss)>& on_step = nullptr) {
  if (iteration != 1 && iteration != 2)
    throw InputError("train_retriever: iteration must be 1 or 2");
  std::vector<RetrievalExample> examples = detail::build_retrieval_examples(
      claims, index, candidates, cfg.doc_cap, iteration, iter1_candidates);
  if (examples.empty()) throw InputError("train_retriever: no trainable sentences");

  Vocabulary vocab;
  for (const auto& [id, doc] : index.documents) {
    vocab.add_text(id);
    for (const std::string& s : doc.sentences) vocab.add_text(s);
  }
  RetrieverModel model = RetrieverModel::create(std::move(vocab), enc_cfg, iteration, cfg.seed);

  const long micro_per_epoch =
      (static_cast<long>(examples.size()) + cfg.batch_size - 1) / cfg.batch_size;
  const long steps_per_epoch = (micro_per_epoch + cfg.grad_accum - 1) / cfg.grad_accum;
  AdamOptimizer opt(cfg.learning_rate, cfg.warmup_ratio, cfg.epochs * steps_per_epoch);

  std::mt19937_64 shuffle_rng(static_cast<uint64_t>(cfg.seed) ^ 0x9e3779b97f4a7c15ULL);
  std::vector<size_t> order(examples.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = i;

  long pending = 0;
  double pending_loss = 0.0;
  long step = 0;
  auto flush = [&]() {
    if (pending == 0) return;
    opt.step(*model.store);
    ++step;
    if (on_step) on_step(step, pending_loss / static_cast<double>(pending));
    pending = 0;
    pending_loss = 0.0;
  };

  for (long epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), shuffle_rng);
    for (size_t pos = 0; pos < order.size(); pos += cfg.batch_size) {
      size_t end = std::min(order.size(), pos + static_cast<size_t>(cfg.batch_size));
      Tape tape;
      std::vector<Var> prob_parts;
      std::vector<double> labels;
      for (size_t o = pos; o < end; ++o) {
        const RetrievalExample& ex = examples[order[o]];
        const std::string* top1 = ex.has_top1 ? &ex.top1_text : nullptr;
        DocScores ds =
            model.score_document_on_tape(tape, *model.encoder, ex.claim->text, *ex.doc, top1);
        if (!ds.probs.valid()) continue;
        prob_parts.push_back(ds.probs);
        for (int sent : ds.sentence_of_row)
          labels.push_back(ex.gold_sentences.count(sent) ? 1.0 : 0.0);
      }
      if (prob_parts.empty()) continue;
      Var probs = prob_parts.size() == 1 ? prob_parts[0] : tape.vstack(prob_parts);
      Mat label_mat(static_cast<int>(labels.size()), 1);
      for (size_t i = 0; i < labels.size(); ++i) label_mat.a[i] = labels[i];
      Var loss = tape.scale(tape.bce_sum(probs, label_mat),
                            1.0 / static_cast<double>(labels.size()));
      pending_loss += tape.scalar(loss);
      Var scaled = tape.scale(loss, 1.0 / static_cast<double>(cfg.grad_accum));
      tape.backward(scaled);
      ++pending;
      if (pending == cfg.grad_accum) flush();
    }
    flush();  // partial accumulation never carries across epochs
  }
  return model;
}

}  // namespace factver
