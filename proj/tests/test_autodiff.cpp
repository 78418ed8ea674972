#include <cmath>
#include <random>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "factver/autodiff.hpp"
#include "factver/params.hpp"
#include "support/oracles.hpp"

using namespace factver;
using testsupport::expect_param_gradients;

namespace {

// Store with a few small dense parameters, values away from kinks.
ParamStore make_store(unsigned seed = 7) {
  ParamStore store;
  std::mt19937_64 rng(seed);
  auto fill = [&rng](Mat& m) {
    for (double& v : m.a) {
      double u = static_cast<double>(rng() % 2000) / 1000.0 - 1.0;  // [-1, 1)
      if (std::fabs(u) < 0.05) u += 0.11;  // keep relu inputs off zero
      v = u;
    }
  };
  fill(store.create("a", 2, 3).value);
  fill(store.create("b", 3, 2).value);
  fill(store.create("c", 2, 3).value);
  fill(store.create("r", 1, 3).value);
  fill(store.create("s", 1, 1).value);
  return store;
}

}  // namespace

TEST(TapeValues, SigmoidSoftmaxLayerNorm) {
  Tape tape;
  Mat x(1, 1);
  x.at(0, 0) = 0.7;
  EXPECT_NEAR(tape.scalar(tape.sigmoid_op(tape.constant(x))), 0.6681877721681662, 1e-15);

  Mat logits(1, 3);
  logits.at(0, 0) = 1.0;
  logits.at(0, 1) = 2.0;
  logits.at(0, 2) = 3.0;
  Var sm = tape.softmax_rows(tape.constant(logits));
  const Mat& p = tape.val(sm);
  EXPECT_NEAR(p.at(0, 0), 0.09003057317038046, 1e-15);
  EXPECT_NEAR(p.at(0, 1), 0.24472847105479767, 1e-15);
  EXPECT_NEAR(p.at(0, 2), 0.6652409557748219, 1e-15);
  EXPECT_NEAR(p.at(0, 0) + p.at(0, 1) + p.at(0, 2), 1.0, 1e-12);

  Mat v(1, 4);
  for (int i = 0; i < 4; ++i) v.at(0, i) = i + 1.0;
  Mat gain(1, 4), bias(1, 4);
  gain.fill(1.0);
  bias.fill(0.0);
  Var ln = tape.layernorm_rows(tape.constant(v), tape.constant(gain), tape.constant(bias));
  const Mat& y = tape.val(ln);
  EXPECT_NEAR(y.at(0, 0), -1.3416354199689269, 1e-12);
  EXPECT_NEAR(y.at(0, 1), -0.447211806656309, 1e-12);
  EXPECT_NEAR(y.at(0, 2), 0.447211806656309, 1e-12);
  EXPECT_NEAR(y.at(0, 3), 1.3416354199689269, 1e-12);
}

TEST(TapeValues, LossesAgainstFrozenArithmetic) {
  Tape tape;
  Mat probs(2, 1);
  probs.at(0, 0) = 0.8;
  probs.at(1, 0) = 0.3;
  Mat labels(2, 1);
  labels.at(0, 0) = 1.0;
  labels.at(1, 0) = 0.0;
  EXPECT_NEAR(tape.scalar(tape.bce_sum(tape.constant(probs), labels)), 0.5798184952529422,
              1e-14);

  Mat logits(1, 3);
  logits.at(0, 0) = 1.0;
  logits.at(0, 1) = 2.0;
  logits.at(0, 2) = 3.0;
  EXPECT_NEAR(tape.scalar(tape.softmax_ce(tape.constant(logits), 2)), 0.40760596444438013,
              1e-14);
}

TEST(TapeGradients, MatmulChain) {
  ParamStore store = make_store(11);
  auto forward = [&store](Tape& t) {
    Var a = t.param(store.get("a").value, &store.get("a").grad);
    Var b = t.param(store.get("b").value, &store.get("b").grad);
    return t.sum_all(t.matmul(a, b));  // 2x3 * 3x2
  };
  expect_param_gradients(store, "a", forward);
  expect_param_gradients(store, "b", forward);
}

TEST(TapeGradients, MatmulTransposed) {
  ParamStore store = make_store(12);
  auto forward = [&store](Tape& t) {
    Var a = t.param(store.get("a").value, &store.get("a").grad);
    Var c = t.param(store.get("c").value, &store.get("c").grad);
    return t.sum_all(t.matmul_nt(a, c));  // 2x3 * (2x3)^T
  };
  expect_param_gradients(store, "a", forward);
  expect_param_gradients(store, "c", forward);
}

TEST(TapeGradients, ElementwiseOps) {
  ParamStore store = make_store(13);
  auto forward = [&store](Tape& t) {
    Var a = t.param(store.get("a").value, &store.get("a").grad);
    Var c = t.param(store.get("c").value, &store.get("c").grad);
    Var mixed = t.add(t.mul(a, c), t.sub(a, t.scale(c, 0.4)));
    return t.sum_all(t.mul(mixed, mixed));  // square for nontrivial curvature
  };
  expect_param_gradients(store, "a", forward);
  expect_param_gradients(store, "c", forward);
}

TEST(TapeGradients, RowBroadcastAndScaleBy) {
  ParamStore store = make_store(14);
  auto forward = [&store](Tape& t) {
    Var a = t.param(store.get("a").value, &store.get("a").grad);
    Var r = t.param(store.get("r").value, &store.get("r").grad);
    Var s = t.param(store.get("s").value, &store.get("s").grad);
    return t.sum_all(t.scale_by(t.add_rowvec(a, r), s));
  };
  expect_param_gradients(store, "a", forward);
  expect_param_gradients(store, "r", forward);
  expect_param_gradients(store, "s", forward);
}

TEST(TapeGradients, NonlinearitiesAwayFromKinks) {
  ParamStore store = make_store(15);
  auto forward = [&store](Tape& t) {
    Var a = t.param(store.get("a").value, &store.get("a").grad);
    Var h = t.sigmoid_op(t.relu(a));
    return t.sum_all(t.mul(h, t.one_minus(h)));
  };
  expect_param_gradients(store, "a", forward);
}

TEST(TapeGradients, ShapeOps) {
  ParamStore store = make_store(16);
  auto forward = [&store](Tape& t) {
    Var a = t.param(store.get("a").value, &store.get("a").grad);
    Var c = t.param(store.get("c").value, &store.get("c").grad);
    Var cat = t.concat_cols({a, c});              // 2x6
    Var stack = t.vstack({t.row(cat, 0), t.row(cat, 1), t.row(cat, 0)});
    return t.sum_all(t.mul(stack, stack));
  };
  expect_param_gradients(store, "a", forward);
  expect_param_gradients(store, "c", forward);
}

TEST(TapeGradients, GatherRowsAccumulatesRepeats) {
  ParamStore store;
  std::mt19937_64 rng(17);
  Mat& table = store.create("table", 4, 3).value;
  for (double& v : table.a) v = static_cast<double>(rng() % 1000) / 500.0 - 1.0;
  auto forward = [&store](Tape& t) {
    Var tab = t.param(store.get("table").value, &store.get("table").grad);
    Var g = t.gather_rows(tab, {2, 0, 2, 2, 1});  // row 2 thrice, row 3 never
    return t.sum_all(t.mul(g, g));
  };
  expect_param_gradients(store, "table", forward);
}

TEST(TapeGradients, SoftmaxAndLayerNorm) {
  ParamStore store = make_store(18);
  ParamStore aux;
  Mat& gain = aux.create("g", 1, 3).value;
  Mat& bias = aux.create("b", 1, 3).value;
  gain.at(0, 0) = 1.1;
  gain.at(0, 1) = 0.9;
  gain.at(0, 2) = 1.0;
  bias.at(0, 0) = 0.05;
  bias.at(0, 1) = -0.1;
  bias.at(0, 2) = 0.0;
  auto forward = [&store, &aux](Tape& t) {
    Var a = t.param(store.get("a").value, &store.get("a").grad);
    Var g = t.param(aux.get("g").value, &aux.get("g").grad);
    Var b = t.param(aux.get("b").value, &aux.get("b").grad);
    Var normed = t.layernorm_rows(a, g, b);
    Var sm = t.softmax_rows(normed);
    return t.sum_all(t.mul(sm, normed));
  };
  expect_param_gradients(store, "a", forward);
  expect_param_gradients(aux, "g", forward);
  expect_param_gradients(aux, "b", forward);
}

TEST(TapeGradients, Losses) {
  ParamStore store;
  Mat& raw = store.create("raw", 3, 1).value;
  raw.at(0, 0) = 0.4;
  raw.at(1, 0) = -0.8;
  raw.at(2, 0) = 1.3;
  Mat labels(3, 1);
  labels.at(0, 0) = 1.0;
  labels.at(1, 0) = 0.0;
  labels.at(2, 0) = 1.0;
  auto forward_bce = [&store, &labels](Tape& t) {
    Var r = t.param(store.get("raw").value, &store.get("raw").grad);
    return t.bce_sum(t.sigmoid_op(r), labels);
  };
  expect_param_gradients(store, "raw", forward_bce);

  ParamStore store2;
  Mat& logits = store2.create("logits", 1, 3).value;
  logits.at(0, 0) = 0.2;
  logits.at(0, 1) = -0.5;
  logits.at(0, 2) = 0.9;
  auto forward_ce = [&store2](Tape& t) {
    Var l = t.param(store2.get("logits").value, &store2.get("logits").grad);
    return t.softmax_ce(l, 1);
  };
  expect_param_gradients(store2, "logits", forward_ce);
}

TEST(TapeBackward, AccumulatesAcrossMultipleBackwardCalls) {
  // Gradient accumulation: two backward passes double the sink.
  ParamStore store = make_store(19);
  auto forward = [&store](Tape& t) {
    Var a = t.param(store.get("a").value, &store.get("a").grad);
    return t.sum_all(t.mul(a, a));
  };
  store.zero_grads();
  {
    Tape t;
    t.backward(forward(t));
  }
  Mat once = store.get("a").grad;
  {
    Tape t;
    t.backward(forward(t));
  }
  const Mat& twice = store.get("a").grad;
  for (size_t i = 0; i < once.a.size(); ++i) EXPECT_NEAR(twice.a[i], 2.0 * once.a[i], 1e-12);
}
