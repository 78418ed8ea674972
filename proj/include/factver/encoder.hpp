#pragma once
// Sequence encoder contract plus the bundled default implementation: a small
// from-scratch transformer (learned token + position embeddings, multi-head
// self-attention, post-layer-norm residual blocks). Any encoder producing
// one d-dimensional hidden state per token can replace it.

#include <cmath>
#include <memory>
#include <random>
#include <string>
#include <vector>

#include "factver/autodiff.hpp"
#include "factver/errors.hpp"
#include "factver/params.hpp"
#include "factver/tokens.hpp"

namespace factver {

class Encoder {
 public:
  virtual ~Encoder() = default;
  virtual int hidden_dim() const = 0;
  // One hidden row per token of the window. Differentiable through `tape`.
  virtual Var encode(Tape& tape, const TokenSequence& window) const = 0;
};

// Inference-only convenience: hidden state of a unit's first token.
inline Mat first_token_state(const Mat& hidden, const TokenSequence& window, UnitKey unit) {
  int pos = unit_first_pos(window, unit);
  if (pos < 0 || pos >= hidden.rows)
    throw InputError("first_token_state: span position outside the encoding");
  Mat out(1, hidden.cols);
  for (int j = 0; j < hidden.cols; ++j) out.at(0, j) = hidden.at(pos, j);
  return out;
}

struct TransformerConfig {
  int vocab_size = 0;
  int hidden_dim = 64;
  int layers = 2;
  int heads = 4;
  int max_positions = 512;
};

// Parameter names are stable strings so checkpoints are self-describing.
class TransformerEncoder : public Encoder {
 public:
  TransformerEncoder(ParamStore& store, TransformerConfig cfg) : store_(store), cfg_(cfg) {
    if (cfg_.hidden_dim % cfg_.heads != 0)
      throw InputError("hidden_dim must be divisible by the head count");
    if (cfg_.vocab_size < 4) throw InputError("encoder vocabulary is too small");
  }

  int hidden_dim() const override { return cfg_.hidden_dim; }
  const TransformerConfig& config() const { return cfg_; }

  // Creates and initializes every parameter this encoder uses, in a fixed
  // order so a seeded generator reproduces the same model.
  void init_params(std::mt19937_64& rng) {
    const int d = cfg_.hidden_dim;
    const int dk = d / cfg_.heads;
    auto mk = [&](const std::string& name, int r, int c, bool zero = false) {
      Param& p = store_.create(name, r, c);
      if (!zero) init_xavier(p.value, rng);
    };
    mk("enc.emb.tok", cfg_.vocab_size, d);
    mk("enc.emb.pos", cfg_.max_positions, d);
    ln_init("enc.emb.ln", d);
    for (int l = 0; l < cfg_.layers; ++l) {
      const std::string base = "enc.l" + std::to_string(l) + ".";
      for (int h = 0; h < cfg_.heads; ++h) {
        const std::string hb = base + "h" + std::to_string(h) + ".";
        mk(hb + "wq", d, dk);
        mk(hb + "wk", d, dk);
        mk(hb + "wv", d, dk);
      }
      mk(base + "wo", d, d);
      ln_init(base + "ln1", d);
      mk(base + "ffn.w1", d, 4 * d);
      mk(base + "ffn.b1", 1, 4 * d, /*zero=*/true);
      mk(base + "ffn.w2", 4 * d, d);
      mk(base + "ffn.b2", 1, d, /*zero=*/true);
      ln_init(base + "ln2", d);
    }
  }

  Var encode(Tape& tape, const TokenSequence& window) const override {
    const int len = window.length();
    if (len == 0) throw InputError("cannot encode an empty sequence");
    if (len > cfg_.max_positions)
      throw InputError("window of " + std::to_string(len) +
                       " tokens exceeds the position table (" +
                       std::to_string(cfg_.max_positions) + ")");
    for (int id : window.tokens)
      if (id < 0 || id >= cfg_.vocab_size) throw InputError("token id outside the vocabulary");

    std::vector<int> positions(len);
    for (int i = 0; i < len; ++i) positions[i] = i;

    Var tok = tape.gather_rows(p(tape, "enc.emb.tok"), window.tokens);
    Var pos = tape.gather_rows(p(tape, "enc.emb.pos"), positions);
    Var x = tape.layernorm_rows(tape.add(tok, pos), p(tape, "enc.emb.ln.g"),
                                p(tape, "enc.emb.ln.b"));

    const int d = cfg_.hidden_dim;
    const int dk = d / cfg_.heads;
    const double inv_sqrt_dk = 1.0 / std::sqrt(static_cast<double>(dk));
    for (int l = 0; l < cfg_.layers; ++l) {
      const std::string base = "enc.l" + std::to_string(l) + ".";
      std::vector<Var> head_ctx;
      for (int h = 0; h < cfg_.heads; ++h) {
        const std::string hb = base + "h" + std::to_string(h) + ".";
        Var q = tape.matmul(x, p(tape, hb + "wq"));
        Var k = tape.matmul(x, p(tape, hb + "wk"));
        Var v = tape.matmul(x, p(tape, hb + "wv"));
        Var scores = tape.scale(tape.matmul_nt(q, k), inv_sqrt_dk);
        Var attn = tape.softmax_rows(scores);
        head_ctx.push_back(tape.matmul(attn, v));
      }
      Var mixed = tape.matmul(tape.concat_cols(head_ctx), p(tape, base + "wo"));
      x = tape.layernorm_rows(tape.add(x, mixed), p(tape, base + "ln1.g"),
                              p(tape, base + "ln1.b"));
      Var f1 = tape.relu(tape.add_rowvec(tape.matmul(x, p(tape, base + "ffn.w1")),
                                         p(tape, base + "ffn.b1")));
      Var f2 = tape.add_rowvec(tape.matmul(f1, p(tape, base + "ffn.w2")),
                               p(tape, base + "ffn.b2"));
      x = tape.layernorm_rows(tape.add(x, f2), p(tape, base + "ln2.g"),
                              p(tape, base + "ln2.b"));
    }
    return x;
  }

 private:
  void ln_init(const std::string& base, int d) {
    Param& g = store_.create(base + ".g", 1, d);
    g.value.fill(1.0);
    store_.create(base + ".b", 1, d);
  }

  Var p(Tape& tape, const std::string& name) const {
    Param& prm = store_.get(name);
    return tape.param(prm.value, &prm.grad);
  }

  ParamStore& store_;
  TransformerConfig cfg_;
};

}  // namespace factver
