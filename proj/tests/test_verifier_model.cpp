#include <cmath>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "factver/verification.hpp"
#include "support/fixture_world.hpp"
#include "support/oracles.hpp"
#include "support/tmpdir.hpp"

using namespace factver;

namespace {

// Tiny corpus: two person pages and one city page, plus a document whose
// second sentence carries no tokens at all.
CorpusIndex small_index() {
  CorpusIndex index;
  index.documents.emplace(
      "Ada Pole", Document{"Ada Pole",
                           {"Ada Pole lives in Brightwater.", "Ada Pole is a sculptor."},
                           {{"Brightwater"}, {}}});
  index.documents.emplace(
      "Brightwater",
      Document{"Brightwater", {"Brightwater is a city in Veldany."}, {{"Veldany"}}});
  index.documents.emplace(
      "Odd Page", Document{"Odd Page", {"Odd Page has one real sentence.", "..."}, {{}, {}}});
  index.finalize();
  return index;
}

Vocabulary vocab_for(const CorpusIndex& index, const std::string& extra = "") {
  Vocabulary v;
  for (const auto& [id, doc] : index.documents) {
    v.add_text(id);
    for (const std::string& s : doc.sentences) v.add_text(s);
  }
  if (!extra.empty()) v.add_text(extra);
  return v;
}

TransformerConfig tiny_encoder(int d = 8) {
  TransformerConfig cfg;
  cfg.hidden_dim = d;
  cfg.layers = 1;
  cfg.heads = 2;
  cfg.max_positions = 96;
  return cfg;
}

ClaimRecord labeled_claim(int64_t id, const std::string& text, Label label,
                          std::vector<std::vector<EvidenceRef>> groups = {}) {
  ClaimRecord c;
  c.claim_id = id;
  c.text = text;
  c.has_label = true;
  c.label = label;
  c.evidence_groups = std::move(groups);
  return c;
}

// Encoder decorator that counts calls; lets tests pin how often documents
// are actually encoded.
class CountingEncoder : public Encoder {
 public:
  CountingEncoder(const Encoder& inner) : inner_(inner) {}
  int hidden_dim() const override { return inner_.hidden_dim(); }
  Var encode(Tape& tape, const TokenSequence& window) const override {
    ++calls;
    return inner_.encode(tape, window);
  }
  mutable int calls = 0;

 private:
  const Encoder& inner_;
};

}  // namespace

TEST(MakeBundle, AttachesGoldLabelsPerSentence) {
  CorpusIndex index = small_index();
  ClaimRecord claim = labeled_claim(7, "Ada Pole lives in a city in Veldany.", Label::Supports,
                                    {{{"Ada Pole", 0}, {"Brightwater", 0}}});
  std::vector<ScoredSentence> evidence = {
      {"Ada Pole", 0, 0.9, 1},
      {"Ada Pole", 1, 0.8, 2},
      {"Brightwater", 0, 0.7, 1},
  };
  EvidenceBundle b = make_bundle(claim, evidence, index, /*attach_labels=*/true);
  EXPECT_EQ(b.claim_id, 7);
  ASSERT_EQ(b.evidences.size(), 3u);
  EXPECT_EQ(b.evidences[0].text, "Ada Pole lives in Brightwater.");
  EXPECT_EQ(b.evidences[0].title, "Ada Pole");
  EXPECT_EQ(b.gold_evidence_labels, (std::vector<double>{1.0, 0.0, 1.0}));
  EXPECT_TRUE(b.has_claim_label);
  EXPECT_EQ(b.claim_label, Label::Supports);

  // Inference bundles skip labels entirely.
  EvidenceBundle inf = make_bundle(claim, evidence, index, /*attach_labels=*/false);
  EXPECT_TRUE(inf.gold_evidence_labels.empty());
  EXPECT_FALSE(inf.has_claim_label);
}

TEST(MakeBundle, DropsUnrepresentableSentences) {
  CorpusIndex index = small_index();
  ClaimRecord claim = labeled_claim(8, "Odd Page says something.", Label::NotEnoughInfo);
  std::vector<ScoredSentence> evidence = {{"Odd Page", 1, 0.9, 1}, {"Odd Page", 0, 0.5, 1}};
  EvidenceBundle b = make_bundle(claim, evidence, index, true);
  ASSERT_EQ(b.evidences.size(), 1u) << "the punctuation-only sentence vanishes";
  EXPECT_EQ(b.evidences[0].sentence_index, 0);
  EXPECT_EQ(b.gold_evidence_labels.size(), 1u);
}

TEST(MakeBundle, RejectsBadInput) {
  CorpusIndex index = small_index();
  ClaimRecord claim = labeled_claim(9, "Ada Pole is a sculptor.", Label::Supports,
                                    {{{"Ada Pole", 1}}});
  std::vector<ScoredSentence> six(6, ScoredSentence{"Ada Pole", 0, 0.5, 1});
  try {
    make_bundle(claim, six, index, false);
    FAIL() << "expected InputError";
  } catch (const InputError& e) {
    EXPECT_NE(std::string(e.what()).find("cap is 5"), std::string::npos) << e.what();
  }
  EXPECT_THROW(make_bundle(claim, {{"No Page", 0, 0.5, 1}}, index, false), InputError);
  EXPECT_THROW(make_bundle(claim, {{"Ada Pole", 5, 0.5, 1}}, index, false), InputError);

  ClaimRecord unlabeled;
  unlabeled.claim_id = 10;
  unlabeled.text = "something";
  EXPECT_THROW(make_bundle(unlabeled, {}, index, true), InputError);
  EXPECT_NO_THROW(make_bundle(unlabeled, {}, index, false));
}

TEST(VerificationLossValue, HandComputed) {
  // Node BCE (-ln 0.8 - ln 0.7)/2 plus label CE -ln 0.5.
  double loss = verification_loss_value({0.8, 0.3}, {1.0, 0.0}, {0.2, 0.5, 0.3}, Label::Refutes);
  EXPECT_DOUBLE_EQ(loss, 0.2899092476264711 + 0.6931471805599453);
  EXPECT_THROW(verification_loss_value({0.8}, {1.0, 0.0}, {0.2, 0.5, 0.3}, Label::Refutes),
               InputError);
  EXPECT_THROW(verification_loss_value({}, {}, {0.2, 0.5, 0.3}, Label::Refutes), InputError);
  EXPECT_THROW(verification_loss_value({0.8}, {0.5}, {0.2, 0.5, 0.3}, Label::Refutes), InputError);
}

TEST(VerifierModel, EncodesEachDocumentOnce) {
  CorpusIndex index = small_index();
  std::string claim_text = "Ada Pole lives in a city in Veldany.";
  VerifierModel model = VerifierModel::create(vocab_for(index, claim_text), tiny_encoder(), 2, 4);

  ClaimRecord claim = labeled_claim(1, claim_text, Label::Supports,
                                    {{{"Ada Pole", 0}, {"Brightwater", 0}}});
  // Three evidences across two documents.
  EvidenceBundle b = make_bundle(claim,
                                 {{"Ada Pole", 0, 0.9, 1},
                                  {"Brightwater", 0, 0.8, 1},
                                  {"Ada Pole", 1, 0.7, 1}},
                                 index, true);

  CountingEncoder counter(*model.encoder);
  {
    Tape tape;
    std::vector<Var> rows = model.intra_rows(tape, counter, b, index);
    ASSERT_EQ(rows.size(), 3u);
    for (const Var& r : rows) EXPECT_TRUE(r.valid());
    EXPECT_EQ(counter.calls, 2) << "two distinct documents, one window each";
  }
  counter.calls = 0;
  {
    Tape tape;
    std::vector<Var> rows = model.inter_rows(tape, counter, b);
    ASSERT_EQ(rows.size(), 3u);
    EXPECT_EQ(counter.calls, 1) << "one concatenated evidence sequence";
  }
}

TEST(VerifierModel, ForwardShapesAndDeterminism) {
  CorpusIndex index = small_index();
  std::string claim_text = "Ada Pole lives in a city in Veldany.";
  VerifierModel model = VerifierModel::create(vocab_for(index, claim_text), tiny_encoder(), 2, 4);
  ClaimRecord claim = labeled_claim(1, claim_text, Label::Supports,
                                    {{{"Ada Pole", 0}, {"Brightwater", 0}}});
  EvidenceBundle b = make_bundle(
      claim, {{"Ada Pole", 0, 0.9, 1}, {"Brightwater", 0, 0.8, 1}}, index, true);

  VerificationOutput out = model.verify_claim(b, index);
  ASSERT_EQ(out.node_confidences.size(), 4u) << "two evidences, two views each";
  for (double c : out.node_confidences) {
    EXPECT_GT(c, 0.0);
    EXPECT_LT(c, 1.0);
  }
  double sum = 0.0;
  for (double p : out.label_distribution) {
    EXPECT_GT(p, 0.0);
    sum += p;
  }
  EXPECT_NEAR(sum, 1.0, 1e-12);
  int argmax = 0;
  for (int k = 1; k < 3; ++k)
    if (out.label_distribution[k] > out.label_distribution[argmax]) argmax = k;
  EXPECT_EQ(out.predicted_label, static_cast<Label>(argmax));

  VerificationOutput again = model.verify_claim(b, index);
  EXPECT_EQ(out.node_confidences, again.node_confidences);
  EXPECT_EQ(out.label_distribution, again.label_distribution);
}

TEST(VerifierModel, EmptyBundleIsNotEnoughInfo) {
  CorpusIndex index = small_index();
  VerifierModel model = VerifierModel::create(vocab_for(index), tiny_encoder(), 1, 4);
  EvidenceBundle empty;
  empty.claim_id = 3;
  empty.claim_text = "Unverifiable statement.";
  VerificationOutput out = model.verify_claim(empty, index);
  EXPECT_EQ(out.predicted_label, Label::NotEnoughInfo);
  EXPECT_TRUE(out.node_confidences.empty());
  for (double p : out.label_distribution) EXPECT_DOUBLE_EQ(p, 1.0 / 3.0);

  Tape tape;
  EXPECT_THROW(model.forward(tape, *model.encoder, empty, index), InputError);
}

TEST(VerifierModel, ExactTiePrefersSupports) {
  // Zeroing the classifier makes the logits identical; the strict argmax
  // then keeps the first label.
  CorpusIndex index = small_index();
  std::string claim_text = "Ada Pole is a sculptor.";
  VerifierModel model = VerifierModel::create(vocab_for(index, claim_text), tiny_encoder(), 1, 4);
  model.store->get("ver.cls.w").value.zero();
  model.store->get("ver.cls.b").value.zero();
  ClaimRecord claim = labeled_claim(1, claim_text, Label::Supports, {{{"Ada Pole", 1}}});
  EvidenceBundle b = make_bundle(claim, {{"Ada Pole", 1, 0.9, 1}}, index, true);
  VerificationOutput out = model.verify_claim(b, index);
  for (double p : out.label_distribution) EXPECT_DOUBLE_EQ(p, 1.0 / 3.0);
  EXPECT_EQ(out.predicted_label, Label::Supports);
}

TEST(VerifierModel, TapeLossMatchesPlainArithmetic) {
  CorpusIndex index = small_index();
  std::string claim_text = "Ada Pole lives in a city in Veldany.";
  VerifierModel model = VerifierModel::create(vocab_for(index, claim_text), tiny_encoder(), 2, 6);
  // The plain-arithmetic helper clamps probabilities at 1e-7 while the tape
  // computes exact log-softmax; keep the freshly initialized heads small so
  // the comparison happens away from the clamp.
  for (const char* name : {"ver.cls.w", "ver.cls.b", "ver.conf.w2", "ver.conf.b2"}) {
    Mat& value = model.store->get(name).value;
    for (size_t i = 0; i < value.size(); ++i) value.a[i] *= 0.05;
  }
  ClaimRecord claim = labeled_claim(1, claim_text, Label::Supports,
                                    {{{"Ada Pole", 0}, {"Brightwater", 0}}});
  EvidenceBundle b = make_bundle(
      claim, {{"Ada Pole", 0, 0.9, 1}, {"Brightwater", 0, 0.8, 1}, {"Ada Pole", 1, 0.1, 2}},
      index, true);

  Tape tape;
  VerifierModel::ForwardVars f = model.forward(tape, *model.encoder, b, index);
  double tape_loss = tape.scalar(model.loss_on_tape(tape, f, b));

  VerificationOutput out = model.verify_claim(b, index);
  std::vector<double> node_labels;
  for (int view = 0; view < 2; ++view)
    for (double y : b.gold_evidence_labels) node_labels.push_back(y);
  for (double p : out.label_distribution) ASSERT_GT(p, 1e-6) << "comparison left the safe regime";
  for (double c : out.node_confidences) ASSERT_GT(std::min(c, 1.0 - c), 1e-6);
  double plain = verification_loss_value(out.node_confidences, node_labels,
                                         out.label_distribution, b.claim_label);
  EXPECT_NEAR(tape_loss, plain, 1e-9);
}

TEST(VerifierModel, GradientsMatchFiniteDifferences) {
  CorpusIndex index = small_index();
  std::string claim_text = "Ada Pole lives in a city in Veldany.";
  VerifierModel model = VerifierModel::create(vocab_for(index, claim_text), tiny_encoder(8), 2, 12);
  ClaimRecord claim = labeled_claim(1, claim_text, Label::Supports,
                                    {{{"Ada Pole", 0}, {"Brightwater", 0}}});
  EvidenceBundle b = make_bundle(
      claim, {{"Ada Pole", 0, 0.9, 1}, {"Brightwater", 0, 0.8, 1}}, index, true);

  auto forward = [&](Tape& tape) {
    VerifierModel::ForwardVars f = model.forward(tape, *model.encoder, b, index);
    return model.loss_on_tape(tape, f, b);
  };
  // One representative parameter from every stage of the pipeline: encoder
  // attention and feed-forward, both alignment stacks, the fusion layers,
  // the confidence head, and the classifier.
  for (const char* name :
       {"enc.l0.h0.wq", "enc.l0.ffn.w2", "enc.emb.ln.g", "ver.intra.align.ts",
        "ver.intra.align.cts", "ver.inter.align.ts", "ver.inter.align.cts", "ver.graph.l0.w0",
        "ver.graph.l0.w2", "ver.graph.l0.wg", "ver.graph.l1.w1", "ver.graph.l1.w3",
        "ver.conf.w1", "ver.conf.b2", "ver.cls.w", "ver.cls.b"})
    testsupport::expect_param_gradients(*model.store, name, forward);
}

TEST(VerifierModel, SaveLoadRoundTrip) {
  testsupport::TmpDir tmp;
  CorpusIndex index = small_index();
  std::string claim_text = "Ada Pole is a sculptor.";
  VerifierModel model = VerifierModel::create(vocab_for(index, claim_text), tiny_encoder(), 2, 31);
  model.max_len = 80;
  model.stride = 20;
  std::string path = tmp.file("verifier.bin");
  model.save(path);

  VerifierModel back = VerifierModel::load(path);
  EXPECT_EQ(back.graph_layers, 2);
  EXPECT_EQ(back.max_len, 80);
  EXPECT_EQ(back.stride, 20);

  ClaimRecord claim = labeled_claim(1, claim_text, Label::Supports, {{{"Ada Pole", 1}}});
  EvidenceBundle b = make_bundle(claim, {{"Ada Pole", 1, 0.9, 1}, {"Ada Pole", 0, 0.2, 1}},
                                 index, true);
  VerificationOutput a = model.verify_claim(b, index);
  VerificationOutput c = back.verify_claim(b, index);
  EXPECT_EQ(a.label_distribution, c.label_distribution);
  EXPECT_EQ(a.node_confidences, c.node_confidences);

  // A retriever checkpoint is refused.
  Checkpoint ck;
  ck.meta["kind"] = 1;
  std::string foreign = tmp.file("foreign.bin");
  save_checkpoint(foreign, ck);
  EXPECT_THROW(VerifierModel::load(foreign), InputError);
}

TEST(TrainVerifier, RunsRestartsAndPicksByDevScore) {
  testsupport::World world = testsupport::build_world();

  // Train on a slice of single-evidence claims, half supported and half
  // refuted; dev on a disjoint slice of the same shapes.
  auto bundles_for = [&](size_t begin, size_t count, bool labels) {
    std::vector<EvidenceBundle> out;
    for (size_t i = begin; i < begin + count; ++i) {
      const ClaimRecord& c = world.claims[i];
      std::vector<ScoredSentence> ev;
      for (const auto& group : c.evidence_groups)
        for (const EvidenceRef& e : group) ev.push_back({e.doc_id, e.sentence_index, 1.0, 1});
      out.push_back(make_bundle(c, ev, world.index, labels));
    }
    return out;
  };
  // Claims 55..65 straddle the SUPPORTS / REFUTES boundary of the fixture.
  std::vector<EvidenceBundle> train = bundles_for(55, 10, true);
  std::vector<EvidenceBundle> dev = bundles_for(52, 3, false);
  std::vector<ClaimRecord> dev_gold(world.claims.begin() + 52, world.claims.begin() + 55);

  VerifierConfig cfg;
  cfg.learning_rate = 1e-3;
  cfg.batch_size = 2;
  cfg.grad_accum = 2;
  cfg.epochs = 1;
  cfg.restarts = 2;
  cfg.graph_layers = 1;
  cfg.seed = 5;

  TransformerConfig enc = tiny_encoder(8);
  std::set<long> restarts_seen;
  long steps_seen = 0;
  VerifierModel model = train_verifier(train, dev, dev_gold, world.index, cfg, enc,
                                       [&](long restart, long step, double loss) {
                                         restarts_seen.insert(restart);
                                         ++steps_seen;
                                         EXPECT_TRUE(std::isfinite(loss));
                                       });
  EXPECT_EQ(restarts_seen, (std::set<long>{0, 1}));
  EXPECT_GT(steps_seen, 0);

  // The winner still produces well-formed verdicts.
  VerificationOutput out = model.verify_claim(dev[0], world.index);
  double sum = 0.0;
  for (double p : out.label_distribution) sum += p;
  EXPECT_NEAR(sum, 1.0, 1e-12);

  EXPECT_THROW(train_verifier({}, dev, dev_gold, world.index, cfg, enc), InputError);
  EXPECT_THROW(train_verifier(train, {}, {}, world.index, cfg, enc), InputError)
      << "restart selection needs a dev set";
  std::vector<EvidenceBundle> all_empty(2);
  EXPECT_THROW(train_verifier(all_empty, dev, dev_gold, world.index, cfg, enc), InputError);
}
