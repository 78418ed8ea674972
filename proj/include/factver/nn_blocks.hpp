#pragma once
// Neural building blocks shared by the sentence retriever and the claim
// verifier: the 4d→d alignment transform and the two-layer scoring head.

#include <random>
#include <string>

#include "factver/autodiff.hpp"
#include "factver/params.hpp"

namespace factver {

inline Var bind_param(Tape& tape, ParamStore& store, const std::string& name) {
  Param& p = store.get(name);
  return tape.param(p.value, &p.grad);
}

// Alignment of two d-vectors through a 4d×d matrix: W applied to
// [a, b, a−b, a⊙b]. Used title↔sentence first, then claim↔result.
inline Var align(Tape& tape, Var a, Var b, Var w) {
  const Mat &A = tape.val(a), &B = tape.val(b), &W = tape.val(w);
  if (A.rows != 1 || B.rows != 1 || A.cols != B.cols)
    throw InputError("align: inputs must be matching row vectors");
  if (W.rows != 4 * A.cols)
    throw InputError("align: weight matrix must have 4d rows");
  Var diff = tape.sub(a, b);
  Var had = tape.mul(a, b);
  return tape.matmul(tape.concat_cols({a, b, diff, had}), w);
}

inline void init_align_param(ParamStore& store, const std::string& name, int d,
                             std::mt19937_64& rng) {
  Param& p = store.create(name, 4 * d, d);
  init_xavier(p.value, rng);
}

// Scoring head: d → d rectifier → d → 1 logit.
inline void init_mlp_head(ParamStore& store, const std::string& prefix, int d,
                          std::mt19937_64& rng) {
  Param& w1 = store.create(prefix + ".w1", d, d);
  init_xavier(w1.value, rng);
  store.create(prefix + ".b1", 1, d);
  Param& w2 = store.create(prefix + ".w2", d, 1);
  init_xavier(w2.value, rng);
  store.create(prefix + ".b2", 1, 1);
}

inline Var mlp_logit(Tape& tape, ParamStore& store, const std::string& prefix, Var x) {
  Var h = tape.relu(tape.add_rowvec(tape.matmul(x, bind_param(tape, store, prefix + ".w1")),
                                    bind_param(tape, store, prefix + ".b1")));
  return tape.add_rowvec(tape.matmul(h, bind_param(tape, store, prefix + ".w2")),
                         bind_param(tape, store, prefix + ".b2"));
}

}  // namespace factver
