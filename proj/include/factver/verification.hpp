#pragma once
// Claim verification. Every evidence sentence is encoded twice: inside its
// own document (intra view) and inside the concatenated evidence set (inter
// view). The two views become 2N graph nodes, three evidence relations are
// fused by gated graph layers, node confidences weight the final verdict
// representation, and a linear head produces the 3-way label distribution.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
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
#include "factver/graph.hpp"
#include "factver/keywords.hpp"
#include "factver/layouts.hpp"
#include "factver/metrics.hpp"
#include "factver/nn_blocks.hpp"
#include "factver/params.hpp"
#include "factver/types.hpp"

namespace factver {

struct EvidenceItem {
  std::string doc_id;
  int sentence_index = -1;
  std::string text;
  std::string title;
};

// One claim with its retrieved evidence (at most five sentences, in rerank
// order) and, for training, the gold supervision.
struct EvidenceBundle {
  int64_t claim_id = 0;
  std::string claim_text;
  std::vector<EvidenceItem> evidences;
  std::vector<double> gold_evidence_labels;  // 0/1 per evidence; empty = unlabeled
  bool has_claim_label = false;
  Label claim_label = Label::NotEnoughInfo;
};

// Assembles a bundle from retrieval output. Evidence sentences that do not
// tokenize to anything cannot be represented and are dropped.
inline EvidenceBundle make_bundle(const ClaimRecord& claim,
                                  const std::vector<ScoredSentence>& evidence,
                                  const CorpusIndex& index, bool attach_labels) {
  if (evidence.size() > 5)
    throw InputError("claim " + std::to_string(claim.claim_id) + " carries " +
                     std::to_string(evidence.size()) + " evidence sentences; the cap is 5");
  EvidenceBundle b;
  b.claim_id = claim.claim_id;
  b.claim_text = claim.text;
  std::set<EvidenceRef> gold_flat;
  for (const auto& group : claim.evidence_groups)
    for (const EvidenceRef& e : group) gold_flat.insert(e);
  for (const ScoredSentence& s : evidence) {
    const Document* doc = index.get_document(s.doc_id);
    if (doc == nullptr)
      throw InputError("evidence document '" + s.doc_id + "' is not in the corpus");
    if (s.sentence_index < 0 || s.sentence_index >= static_cast<int>(doc->sentences.size()))
      throw InputError("document '" + s.doc_id + "' has no sentence " +
                       std::to_string(s.sentence_index));
    const std::string& text = doc->sentences[s.sentence_index];
    if (tokenize_terms(text).empty()) continue;
    b.evidences.push_back({s.doc_id, s.sentence_index, text, s.doc_id});
    if (attach_labels)
      b.gold_evidence_labels.push_back(
          gold_flat.count({s.doc_id, s.sentence_index}) ? 1.0 : 0.0);
  }
  if (attach_labels) {
    if (!claim.has_label)
      throw InputError("claim " + std::to_string(claim.claim_id) +
                       " has no label; cannot build a training bundle");
    b.has_claim_label = true;
    b.claim_label = claim.label;
  }
  return b;
}

struct VerificationOutput {
  std::vector<double> node_confidences;           // 2N, intra nodes then inter nodes
  std::array<double, 3> label_distribution = {};  // SUPPORTS, REFUTES, NEI
  Label predicted_label = Label::NotEnoughInfo;
};

// Plain-arithmetic loss for tests: mean binary cross entropy over node
// confidences plus cross entropy of the label distribution.
inline double verification_loss_value(const std::vector<double>& node_confidences,
                                      const std::vector<double>& node_labels,
                                      const std::array<double, 3>& distribution,
                                      Label gold_label) {
  if (node_confidences.size() != node_labels.size() || node_confidences.empty())
    throw InputError("verification_loss: confidence/label shape mismatch");
  const double eps = 1e-7;
  double bce = 0.0;
  for (size_t i = 0; i < node_confidences.size(); ++i) {
    double p = std::min(1.0 - eps, std::max(eps, node_confidences[i]));
    double y = node_labels[i];
    if (y != 0.0 && y != 1.0) throw InputError("verification_loss: labels must be 0 or 1");
    bce -= y * std::log(p) + (1.0 - y) * std::log(1.0 - p);
  }
  bce /= static_cast<double>(node_confidences.size());
  double q = std::min(1.0 - eps, std::max(eps, distribution[static_cast<int>(gold_label)]));
  return bce - std::log(q);
}

class VerifierModel {
 public:
  std::unique_ptr<ParamStore> store = std::make_unique<ParamStore>();
  Vocabulary vocab;
  TransformerConfig enc_cfg;
  std::unique_ptr<TransformerEncoder> encoder;
  KeywordExtractor keywords = default_keyword_extractor();
  int graph_layers = 3;
  int max_len = 512;
  int stride = 128;
  int claim_max_tokens = 64;

  static VerifierModel create(Vocabulary vocab, TransformerConfig enc_cfg, int graph_layers,
                              long seed) {
    VerifierModel m;
    m.vocab = std::move(vocab);
    m.enc_cfg = enc_cfg;
    m.enc_cfg.vocab_size = m.vocab.size();
    m.graph_layers = graph_layers;
    m.encoder = std::make_unique<TransformerEncoder>(*m.store, m.enc_cfg);
    std::mt19937_64 rng(static_cast<uint64_t>(seed));
    m.encoder->init_params(rng);
    const int d = m.enc_cfg.hidden_dim;
    init_align_param(*m.store, "ver.intra.align.ts", d, rng);
    init_align_param(*m.store, "ver.intra.align.cts", d, rng);
    init_align_param(*m.store, "ver.inter.align.ts", d, rng);
    init_align_param(*m.store, "ver.inter.align.cts", d, rng);
    for (int l = 0; l < graph_layers; ++l) {
      const std::string base = "ver.graph.l" + std::to_string(l) + ".";
      for (const char* w : {"w0", "w1", "w2", "w3"}) {
        Param& p = m.store->create(base + w, d, d);
        init_xavier(p.value, rng);
      }
      Param& wg = m.store->create(base + "wg", 2 * d, d);
      init_xavier(wg.value, rng);
    }
    init_mlp_head(*m.store, "ver.conf", d, rng);
    Param& w = m.store->create("ver.cls.w", d, 3);
    init_xavier(w.value, rng);
    m.store->create("ver.cls.b", 1, 3);
    return m;
  }

  // Intra-document rows: each distinct evidence document is encoded exactly
  // once; every evidence of that document reads its sentence state from the
  // shared encoding. Differentiable through `tape`; the encoder is a
  // parameter so tests can wrap it.
  std::vector<Var> intra_rows(Tape& tape, const Encoder& enc, const EvidenceBundle& bundle,
                              const CorpusIndex& index) const {
    check_bundle(bundle);
    Var w_ts = bind_param(tape, *store, "ver.intra.align.ts");
    Var w_cts = bind_param(tape, *store, "ver.intra.align.cts");
    std::vector<Var> rows(bundle.evidences.size());

    std::vector<std::string> doc_order;
    std::map<std::string, std::vector<size_t>> by_doc;
    for (size_t i = 0; i < bundle.evidences.size(); ++i) {
      const std::string& id = bundle.evidences[i].doc_id;
      if (!by_doc.count(id)) doc_order.push_back(id);
      by_doc[id].push_back(i);
    }
    for (const std::string& doc_id : doc_order) {
      const Document* doc = index.get_document(doc_id);
      if (doc == nullptr)
        throw InputError("evidence document '" + doc_id + "' is not in the corpus");
      TokenSequence seq =
          build_doc_sequence(vocab, bundle.claim_text, claim_max_tokens, *doc, nullptr);
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
      for (size_t i : by_doc[doc_id]) {
        const EvidenceItem& item = bundle.evidences[i];
        if (item.sentence_index < 0 ||
            item.sentence_index >= static_cast<int>(doc->sentences.size()))
          throw InputError("document '" + doc_id + "' has no sentence " +
                           std::to_string(item.sentence_index));
        UnitKey key = UnitKey::sentence(item.sentence_index);
        int w = window_with_tokens(windows, key);
        if (w < 0)
          throw InputError("evidence sentence " + doc_id + ":" +
                           std::to_string(item.sentence_index) + " tokenizes to nothing");
        Var e_s = tape.row(window_hidden(w), unit_first_pos(windows[w], key));
        Var e_ts = align(tape, e_t, e_s, w_ts);
        rows[i] = align(tape, e_c, e_ts, w_cts);
      }
    }
    return rows;
  }

  // Inter-document rows from the single concatenated evidence sequence.
  std::vector<Var> inter_rows(Tape& tape, const Encoder& enc,
                              const EvidenceBundle& bundle) const {
    check_bundle(bundle);
    std::vector<std::pair<std::string, std::string>> entries;
    for (const EvidenceItem& item : bundle.evidences) entries.emplace_back(item.title, item.text);
    TokenSequence seq = build_inter_sequence(vocab, bundle.claim_text, claim_max_tokens, entries);
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
    Var w_ts = bind_param(tape, *store, "ver.inter.align.ts");
    Var w_cts = bind_param(tape, *store, "ver.inter.align.cts");
    std::vector<Var> rows(bundle.evidences.size());
    for (size_t i = 0; i < bundle.evidences.size(); ++i) {
      Var e_t = unit_state(UnitKey::title(static_cast<int>(i)));
      UnitKey skey = UnitKey::sentence(static_cast<int>(i));
      int w = window_with_tokens(windows, skey);
      if (w < 0)
        throw InputError("evidence " + std::to_string(i) + " tokenizes to nothing");
      Var e_s = tape.row(window_hidden(w), unit_first_pos(windows[w], skey));
      Var e_ts = align(tape, e_t, e_s, w_ts);
      rows[i] = align(tape, e_c, e_ts, w_cts);
    }
    return rows;
  }

  struct ForwardVars {
    Var h0;            // 2N x d node matrix before graph layers
    Var h_final;       // 2N x d after the stacked layers
    Var confidences;   // 2N x 1
    Var logits;        // 1 x 3
    DualEvidenceGraph graph;
  };

  // Full differentiable forward pass; requires at least one evidence.
  ForwardVars forward(Tape& tape, const Encoder& enc, const EvidenceBundle& bundle,
                      const CorpusIndex& index) const {
    if (bundle.evidences.empty())
      throw InputError("forward pass needs at least one evidence (degenerate claims are "
                       "handled by verify_claim)");
    std::vector<Var> intra = intra_rows(tape, enc, bundle, index);
    std::vector<Var> inter = inter_rows(tape, enc, bundle);
    std::vector<Var> all_rows;
    all_rows.insert(all_rows.end(), intra.begin(), intra.end());
    all_rows.insert(all_rows.end(), inter.begin(), inter.end());
    ForwardVars f;
    f.h0 = tape.vstack(all_rows);

    std::vector<std::string> docs;
    std::vector<std::set<std::string>> kws;
    for (const EvidenceItem& item : bundle.evidences) {
      docs.push_back(item.doc_id);
      kws.push_back(keywords(item.text));
    }
    f.graph = build_graph(docs, kws, keywords(bundle.claim_text), tape.val(f.h0));

    Var h = f.h0;
    for (int l = 0; l < graph_layers; ++l) {
      const std::string base = "ver.graph.l" + std::to_string(l) + ".";
      GraphLayerVars p{bind_param(tape, *store, base + "w0"), bind_param(tape, *store, base + "w1"),
                       bind_param(tape, *store, base + "w2"), bind_param(tape, *store, base + "w3"),
                       bind_param(tape, *store, base + "wg")};
      h = graph_layer(tape, h, f.graph, p);
    }
    f.h_final = h;

    const int nodes = 2 * static_cast<int>(bundle.evidences.size());
    std::vector<Var> conf_rows;
    Var r_v;
    for (int j = 0; j < nodes; ++j) {
      Var node = tape.row(h, j);
      Var conf = tape.sigmoid_op(mlp_logit(tape, *store, "ver.conf", node));
      conf_rows.push_back(conf);
      Var weighted = tape.scale_by(node, conf);
      r_v = (j == 0) ? weighted : tape.add(r_v, weighted);
    }
    f.confidences = tape.vstack(conf_rows);
    f.logits = tape.add_rowvec(tape.matmul(r_v, bind_param(tape, *store, "ver.cls.w")),
                               bind_param(tape, *store, "ver.cls.b"));
    return f;
  }

  // Differentiable loss: mean node BCE plus 3-way cross entropy.
  Var loss_on_tape(Tape& tape, const ForwardVars& f, const EvidenceBundle& bundle) const {
    if (!bundle.has_claim_label || bundle.gold_evidence_labels.size() != bundle.evidences.size())
      throw InputError("training bundle for claim " + std::to_string(bundle.claim_id) +
                       " lacks gold labels");
    const int n = static_cast<int>(bundle.evidences.size());
    Mat labels(2 * n, 1);
    for (int i = 0; i < n; ++i) {
      labels.at(i, 0) = bundle.gold_evidence_labels[i];
      labels.at(n + i, 0) = bundle.gold_evidence_labels[i];  // both views share supervision
    }
    Var bce = tape.scale(tape.bce_sum(f.confidences, labels), 1.0 / (2.0 * n));
    Var ce = tape.softmax_ce(f.logits, static_cast<int>(bundle.claim_label));
    return tape.add(bce, ce);
  }

  VerificationOutput verify_claim(const EvidenceBundle& bundle, const CorpusIndex& index) const {
    VerificationOutput out;
    if (bundle.evidences.empty()) {
      // No nodes to aggregate: deterministic NOT ENOUGH INFO.
      out.label_distribution = {1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0};
      out.predicted_label = Label::NotEnoughInfo;
      return out;
    }
    Tape tape;
    ForwardVars f = forward(tape, *encoder, bundle, index);
    const Mat& conf = tape.val(f.confidences);
    for (int j = 0; j < conf.rows; ++j) out.node_confidences.push_back(conf.at(j, 0));
    Var dist = tape.softmax_rows(f.logits);
    const Mat& d = tape.val(dist);
    for (int k = 0; k < 3; ++k) out.label_distribution[k] = d.at(0, k);
    int best = 0;
    for (int k = 1; k < 3; ++k)
      if (out.label_distribution[k] > out.label_distribution[best]) best = k;
    out.predicted_label = static_cast<Label>(best);
    return out;
  }

  void save(const std::string& path) const {
    Checkpoint ck;
    ck.meta["kind"] = 2;
    ck.meta["hidden_dim"] = enc_cfg.hidden_dim;
    ck.meta["layers"] = enc_cfg.layers;
    ck.meta["heads"] = enc_cfg.heads;
    ck.meta["max_positions"] = enc_cfg.max_positions;
    ck.meta["vocab_size"] = enc_cfg.vocab_size;
    ck.meta["max_len"] = max_len;
    ck.meta["stride"] = stride;
    ck.meta["claim_max_tokens"] = claim_max_tokens;
    ck.meta["graph_layers"] = graph_layers;
    ck.vocab = vocab.token_list();
    for (const auto& [name, p] : store->params) ck.tensors.emplace(name, p.value);
    save_checkpoint(path, ck);
  }

  static VerifierModel load(const std::string& path) {
    Checkpoint ck = load_checkpoint(path);
    if (!ck.meta.count("kind") || ck.meta.at("kind") != 2)
      throw InputError(path + " is not a claim verifier checkpoint");
    TransformerConfig cfg;
    cfg.hidden_dim = static_cast<int>(ck.meta.at("hidden_dim"));
    cfg.layers = static_cast<int>(ck.meta.at("layers"));
    cfg.heads = static_cast<int>(ck.meta.at("heads"));
    cfg.max_positions = static_cast<int>(ck.meta.at("max_positions"));
    VerifierModel m = create(Vocabulary::from_token_list(ck.vocab), cfg,
                             static_cast<int>(ck.meta.at("graph_layers")), /*seed=*/0);
    m.max_len = static_cast<int>(ck.meta.at("max_len"));
    m.stride = static_cast<int>(ck.meta.at("stride"));
    m.claim_max_tokens = static_cast<int>(ck.meta.at("claim_max_tokens"));
    if (static_cast<int>(ck.meta.at("vocab_size")) != m.vocab.size())
      throw InputError(path + ": vocab_size disagrees with the stored vocabulary");
    adopt_checkpoint_tensors(*m.store, ck, path);
    return m;
  }

 private:
  static void check_bundle(const EvidenceBundle& bundle) {
    if (bundle.evidences.size() > 5)
      throw InputError("bundle for claim " + std::to_string(bundle.claim_id) + " carries " +
                       std::to_string(bundle.evidences.size()) + " evidences; the cap is 5");
  }

  // First window where the unit has a non-empty span, or -1.
  static int window_with_tokens(const std::vector<TokenSequence>& windows, UnitKey key) {
    for (size_t w = 0; w < windows.size(); ++w) {
      auto it = windows[w].origin_spans.find(key);
      if (it != windows[w].origin_spans.end() && it->second.len > 0) return static_cast<int>(w);
    }
    return -1;
  }
};

// Trains the verifier with random restarts, returning the restart with the
// best strict score on the dev bundles. Bundles without evidence cannot
// produce a gradient and are skipped during optimization (they still count
// in dev evaluation through the degenerate NEI rule).
inline VerifierModel train_verifier(
    const std::vector<EvidenceBundle>& train_bundles,
    const std::vector<EvidenceBundle>& dev_bundles, const std::vector<ClaimRecord>& dev_gold,
    const CorpusIndex& index, const VerifierConfig& cfg, TransformerConfig enc_cfg = {},
    const std::function<void(long restart, long step, double loss)>& on_step = nullptr) {
  if (train_bundles.empty()) throw InputError("train_verifier: empty training set");
  if (dev_bundles.empty() && cfg.restarts > 1)
    throw InputError("train_verifier: restart selection needs a dev set");

  std::vector<const EvidenceBundle*> trainable;
  for (const EvidenceBundle& b : train_bundles)
    if (!b.evidences.empty()) trainable.push_back(&b);
  if (trainable.empty())
    throw InputError("train_verifier: every training bundle is empty of evidence");

  Vocabulary vocab;
  for (const auto& [id, doc] : index.documents) {
    vocab.add_text(id);
    for (const std::string& s : doc.sentences) vocab.add_text(s);
  }

  std::optional<VerifierModel> best;
  double best_dev = -1.0;
  for (long restart = 0; restart < cfg.restarts; ++restart) {
    VerifierModel model =
        VerifierModel::create(vocab, enc_cfg, static_cast<int>(cfg.graph_layers),
                              cfg.seed + restart);
    const long micro_per_epoch =
        (static_cast<long>(trainable.size()) + cfg.batch_size - 1) / cfg.batch_size;
    const long steps_per_epoch = (micro_per_epoch + cfg.grad_accum - 1) / cfg.grad_accum;
    AdamOptimizer opt(cfg.learning_rate, cfg.warmup_ratio, cfg.epochs * steps_per_epoch);

    std::mt19937_64 shuffle_rng(static_cast<uint64_t>(cfg.seed + restart) ^
                                0xc2b2ae3d27d4eb4fULL);
    std::vector<size_t> order(trainable.size());
    for (size_t i = 0; i < order.size(); ++i) order[i] = i;

    long pending = 0, step = 0;
    double pending_loss = 0.0;
    auto flush = [&]() {
      if (pending == 0) return;
      opt.step(*model.store);
      ++step;
      if (on_step) on_step(restart, step, pending_loss / static_cast<double>(pending));
      pending = 0;
      pending_loss = 0.0;
    };

    for (long epoch = 0; epoch < cfg.epochs; ++epoch) {
      std::shuffle(order.begin(), order.end(), shuffle_rng);
      for (size_t pos = 0; pos < order.size(); pos += cfg.batch_size) {
        size_t end = std::min(order.size(), pos + static_cast<size_t>(cfg.batch_size));
        Tape tape;
        Var batch_loss;
        int in_batch = 0;
        for (size_t o = pos; o < end; ++o) {
          const EvidenceBundle& b = *trainable[order[o]];
          VerifierModel::ForwardVars f = model.forward(tape, *model.encoder, b, index);
          Var l = model.loss_on_tape(tape, f, b);
          batch_loss = (in_batch == 0) ? l : tape.add(batch_loss, l);
          ++in_batch;
        }
        if (in_batch == 0) continue;
        Var mean_loss = tape.scale(batch_loss, 1.0 / static_cast<double>(in_batch));
        pending_loss += tape.scalar(mean_loss);
        tape.backward(tape.scale(mean_loss, 1.0 / static_cast<double>(cfg.grad_accum)));
        ++pending;
        if (pending == cfg.grad_accum) flush();
      }
      flush();
    }

    double dev_score = 0.0;
    if (!dev_bundles.empty()) {
      std::vector<Prediction> preds;
      for (const EvidenceBundle& b : dev_bundles) {
        VerificationOutput out = model.verify_claim(b, index);
        Prediction p;
        p.claim_id = b.claim_id;
        p.predicted_label = out.predicted_label;
        for (const EvidenceItem& e : b.evidences) p.evidence.push_back({e.doc_id, e.sentence_index});
        p.node_confidences = out.node_confidences;
        preds.push_back(std::move(p));
      }
      dev_score = fever_score(preds, dev_gold);
    }
    if (dev_score > best_dev) {
      best_dev = dev_score;
      best = std::move(model);
    }
  }
  return std::move(*best);
}

}  // namespace factver
