#pragma once
// Reverse-mode automatic differentiation on dense matrices.
//
// A Tape owns the computation graph for one forward pass. Ops append nodes;
// backward() walks the nodes in reverse and accumulates gradients. Parameter
// leaves are bound to external (value, grad) storage so training loops can
// run several tapes before an optimizer step (gradient accumulation).
//
// Single-threaded by design; evaluation order is fixed, so results are
// bit-reproducible for a given input.

#include <algorithm>
#include <cmath>
#include <functional>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "factver/mat.hpp"

namespace factver {

class Tape;

struct Var {
  Tape* tape = nullptr;
  int idx = -1;
  bool valid() const { return tape != nullptr && idx >= 0; }
};

class Tape {
 public:
  struct Node {
    Mat val;
    Mat grad;
    std::function<void(Tape&, const Node&)> back;  // empty for leaves
    Mat* bound_grad = nullptr;                     // external grad sink for parameter leaves
  };

  std::vector<Node> nodes;

  const Mat& val(Var v) const { return nodes[v.idx].val; }
  Mat& grad(Var v) { return nodes[v.idx].grad; }
  double scalar(Var v) const {
    const Mat& m = val(v);
    if (m.rows != 1 || m.cols != 1) throw std::invalid_argument("scalar() on non 1x1 value");
    return m.a[0];
  }

  Var constant(Mat m) { return push(std::move(m), nullptr); }

  // Parameter leaf: value copied in, gradient flushed to *grad_sink on backward().
  Var param(const Mat& value, Mat* grad_sink) {
    Var v = push(value, nullptr);
    nodes[v.idx].bound_grad = grad_sink;
    return v;
  }

  Var matmul(Var a, Var b) {
    const Mat &A = val(a), &B = val(b);
    if (A.cols != B.rows) throw std::invalid_argument("matmul shape mismatch");
    Mat C = mm_nn(A, B);
    return push(std::move(C), [a, b](Tape& t, const Node& n) {
      mm_nt_acc(n.grad, t.val(b), t.grad(a));  // dA = dC * B^T
      mm_tn_acc(t.val(a), n.grad, t.grad(b));  // dB = A^T * dC
    });
  }

  // C = A * B^T (attention score pattern).
  Var matmul_nt(Var a, Var b) {
    const Mat &A = val(a), &B = val(b);
    if (A.cols != B.cols) throw std::invalid_argument("matmul_nt shape mismatch");
    Mat C = mm_nt(A, B);
    return push(std::move(C), [a, b](Tape& t, const Node& n) {
      mm_nn_acc(n.grad, t.val(b), t.grad(a));  // dA = dC * B
      mm_tn_acc(n.grad, t.val(a), t.grad(b));  // dB = dC^T * A
    });
  }

  Var add(Var a, Var b) {
    const Mat &A = val(a), &B = val(b);
    if (!A.same_shape(B)) throw std::invalid_argument("add shape mismatch");
    Mat C = A;
    for (size_t i = 0; i < C.size(); ++i) C.a[i] += B.a[i];
    return push(std::move(C), [a, b](Tape& t, const Node& n) {
      Mat &ga = t.grad(a), &gb = t.grad(b);
      for (size_t i = 0; i < n.grad.size(); ++i) {
        ga.a[i] += n.grad.a[i];
        gb.a[i] += n.grad.a[i];
      }
    });
  }

  Var sub(Var a, Var b) {
    const Mat &A = val(a), &B = val(b);
    if (!A.same_shape(B)) throw std::invalid_argument("sub shape mismatch");
    Mat C = A;
    for (size_t i = 0; i < C.size(); ++i) C.a[i] -= B.a[i];
    return push(std::move(C), [a, b](Tape& t, const Node& n) {
      Mat &ga = t.grad(a), &gb = t.grad(b);
      for (size_t i = 0; i < n.grad.size(); ++i) {
        ga.a[i] += n.grad.a[i];
        gb.a[i] -= n.grad.a[i];
      }
    });
  }

  // Elementwise (Hadamard) product.
  Var mul(Var a, Var b) {
    const Mat &A = val(a), &B = val(b);
    if (!A.same_shape(B)) throw std::invalid_argument("mul shape mismatch");
    Mat C = A;
    for (size_t i = 0; i < C.size(); ++i) C.a[i] *= B.a[i];
    return push(std::move(C), [a, b](Tape& t, const Node& n) {
      const Mat &A2 = t.val(a), &B2 = t.val(b);
      Mat &ga = t.grad(a), &gb = t.grad(b);
      for (size_t i = 0; i < n.grad.size(); ++i) {
        ga.a[i] += n.grad.a[i] * B2.a[i];
        gb.a[i] += n.grad.a[i] * A2.a[i];
      }
    });
  }

  // Broadcast a 1 x c row vector across every row of a.
  Var add_rowvec(Var a, Var b) {
    const Mat &A = val(a), &B = val(b);
    if (B.rows != 1 || B.cols != A.cols) throw std::invalid_argument("add_rowvec shape mismatch");
    Mat C = A;
    for (int r = 0; r < C.rows; ++r)
      for (int c = 0; c < C.cols; ++c) C.at(r, c) += B.at(0, c);
    return push(std::move(C), [a, b](Tape& t, const Node& n) {
      Mat &ga = t.grad(a), &gb = t.grad(b);
      for (int r = 0; r < n.grad.rows; ++r)
        for (int c = 0; c < n.grad.cols; ++c) {
          ga.at(r, c) += n.grad.at(r, c);
          gb.at(0, c) += n.grad.at(r, c);
        }
    });
  }

  Var scale(Var a, double k) {
    Mat C = val(a);
    for (double& v : C.a) v *= k;
    return push(std::move(C), [a, k](Tape& t, const Node& n) {
      Mat& ga = t.grad(a);
      for (size_t i = 0; i < n.grad.size(); ++i) ga.a[i] += k * n.grad.a[i];
    });
  }

  // out = s * a where s is a 1x1 Var. Used by confidence-weighted sums.
  Var scale_by(Var a, Var s) {
    const Mat& S = val(s);
    if (S.rows != 1 || S.cols != 1) throw std::invalid_argument("scale_by needs 1x1 scalar");
    Mat C = val(a);
    for (double& v : C.a) v *= S.a[0];
    return push(std::move(C), [a, s](Tape& t, const Node& n) {
      const Mat& A2 = t.val(a);
      const double sv = t.val(s).a[0];
      Mat &ga = t.grad(a), &gs = t.grad(s);
      for (size_t i = 0; i < n.grad.size(); ++i) {
        ga.a[i] += sv * n.grad.a[i];
        gs.a[0] += A2.a[i] * n.grad.a[i];
      }
    });
  }

  Var relu(Var a) {
    Mat C = val(a);
    for (double& v : C.a) v = v > 0.0 ? v : 0.0;
    return push(std::move(C), [a](Tape& t, const Node& n) {
      const Mat& A2 = t.val(a);
      Mat& ga = t.grad(a);
      for (size_t i = 0; i < n.grad.size(); ++i)
        if (A2.a[i] > 0.0) ga.a[i] += n.grad.a[i];
    });
  }

  Var sigmoid_op(Var a) {
    Mat C = val(a);
    for (double& v : C.a) v = factver::sigmoid(v);
    return push(std::move(C), [a](Tape& t, const Node& n) {
      Mat& ga = t.grad(a);
      for (size_t i = 0; i < n.grad.size(); ++i) {
        double s = n.val.a[i];
        ga.a[i] += n.grad.a[i] * s * (1.0 - s);
      }
    });
  }

  Var one_minus(Var a) {
    Mat C = val(a);
    for (double& v : C.a) v = 1.0 - v;
    return push(std::move(C), [a](Tape& t, const Node& n) {
      Mat& ga = t.grad(a);
      for (size_t i = 0; i < n.grad.size(); ++i) ga.a[i] -= n.grad.a[i];
    });
  }

  Var concat_cols(const std::vector<Var>& parts) {
    if (parts.empty()) throw std::invalid_argument("concat_cols of nothing");
    int r = val(parts[0]).rows, c = 0;
    for (Var p : parts) {
      if (val(p).rows != r) throw std::invalid_argument("concat_cols row mismatch");
      c += val(p).cols;
    }
    Mat C(r, c);
    int off = 0;
    for (Var p : parts) {
      const Mat& P = val(p);
      for (int i = 0; i < r; ++i)
        for (int j = 0; j < P.cols; ++j) C.at(i, off + j) = P.at(i, j);
      off += P.cols;
    }
    std::vector<Var> ps = parts;
    return push(std::move(C), [ps](Tape& t, const Node& n) {
      int off2 = 0;
      for (Var p : ps) {
        Mat& gp = t.grad(p);
        for (int i = 0; i < gp.rows; ++i)
          for (int j = 0; j < gp.cols; ++j) gp.at(i, j) += n.grad.at(i, off2 + j);
        off2 += gp.cols;
      }
    });
  }

  Var vstack(const std::vector<Var>& parts) {
    if (parts.empty()) throw std::invalid_argument("vstack of nothing");
    int c = val(parts[0]).cols, r = 0;
    for (Var p : parts) {
      if (val(p).cols != c) throw std::invalid_argument("vstack col mismatch");
      r += val(p).rows;
    }
    Mat C(r, c);
    int off = 0;
    for (Var p : parts) {
      const Mat& P = val(p);
      for (int i = 0; i < P.rows; ++i)
        for (int j = 0; j < c; ++j) C.at(off + i, j) = P.at(i, j);
      off += P.rows;
    }
    std::vector<Var> ps = parts;
    return push(std::move(C), [ps](Tape& t, const Node& n) {
      int off2 = 0;
      for (Var p : ps) {
        Mat& gp = t.grad(p);
        for (int i = 0; i < gp.rows; ++i)
          for (int j = 0; j < gp.cols; ++j) gp.at(i, j) += n.grad.at(off2 + i, j);
        off2 += gp.rows;
      }
    });
  }

  // Copy of row r as a 1 x c Var.
  Var row(Var a, int r) {
    const Mat& A = val(a);
    if (r < 0 || r >= A.rows) throw std::invalid_argument("row index out of range");
    Mat C(1, A.cols);
    for (int j = 0; j < A.cols; ++j) C.at(0, j) = A.at(r, j);
    return push(std::move(C), [a, r](Tape& t, const Node& n) {
      Mat& ga = t.grad(a);
      for (int j = 0; j < n.grad.cols; ++j) ga.at(r, j) += n.grad.at(0, j);
    });
  }

  // Embedding lookup: rows of `table` selected by ids. Backward scatter-adds.
  Var gather_rows(Var table, std::vector<int> ids) {
    const Mat& T = val(table);
    Mat C(static_cast<int>(ids.size()), T.cols);
    for (size_t i = 0; i < ids.size(); ++i) {
      if (ids[i] < 0 || ids[i] >= T.rows) throw std::invalid_argument("gather id out of range");
      for (int j = 0; j < T.cols; ++j) C.at(static_cast<int>(i), j) = T.at(ids[i], j);
    }
    return push(std::move(C), [table, ids](Tape& t, const Node& n) {
      Mat& gt = t.grad(table);
      for (size_t i = 0; i < ids.size(); ++i)
        for (int j = 0; j < n.grad.cols; ++j) gt.at(ids[i], j) += n.grad.at(static_cast<int>(i), j);
    });
  }

  Var softmax_rows(Var a) {
    Mat C = val(a);
    for (int r = 0; r < C.rows; ++r) {
      double* p = C.row_ptr(r);
      double mx = p[0];
      for (int j = 1; j < C.cols; ++j) mx = std::max(mx, p[j]);
      double z = 0.0;
      for (int j = 0; j < C.cols; ++j) {
        p[j] = std::exp(p[j] - mx);
        z += p[j];
      }
      for (int j = 0; j < C.cols; ++j) p[j] /= z;
    }
    return push(std::move(C), [a](Tape& t, const Node& n) {
      Mat& ga = t.grad(a);
      for (int r = 0; r < n.val.rows; ++r) {
        const double* s = n.val.row_ptr(r);
        const double* g = n.grad.row_ptr(r);
        double dot = 0.0;
        for (int j = 0; j < n.val.cols; ++j) dot += s[j] * g[j];
        double* out = ga.row_ptr(r);
        for (int j = 0; j < n.val.cols; ++j) out[j] += s[j] * (g[j] - dot);
      }
    });
  }

  // Row-wise layer normalization with gain g and bias b (both 1 x c).
  Var layernorm_rows(Var a, Var g, Var b, double eps = 1e-5) {
    const Mat& A = val(a);
    const Mat &G = val(g), &B = val(b);
    if (G.rows != 1 || G.cols != A.cols || B.rows != 1 || B.cols != A.cols)
      throw std::invalid_argument("layernorm gain/bias shape mismatch");
    Mat C(A.rows, A.cols);
    Mat xhat(A.rows, A.cols);
    std::vector<double> inv_std(A.rows);
    for (int r = 0; r < A.rows; ++r) {
      const double* x = A.row_ptr(r);
      double mu = 0.0;
      for (int j = 0; j < A.cols; ++j) mu += x[j];
      mu /= A.cols;
      double var = 0.0;
      for (int j = 0; j < A.cols; ++j) var += (x[j] - mu) * (x[j] - mu);
      var /= A.cols;
      double is = 1.0 / std::sqrt(var + eps);
      inv_std[r] = is;
      for (int j = 0; j < A.cols; ++j) {
        double xh = (x[j] - mu) * is;
        xhat.at(r, j) = xh;
        C.at(r, j) = xh * G.at(0, j) + B.at(0, j);
      }
    }
    auto xh_keep = std::make_shared<Mat>(std::move(xhat));
    auto is_keep = std::make_shared<std::vector<double>>(std::move(inv_std));
    return push(std::move(C), [a, g, b, xh_keep, is_keep](Tape& t, const Node& n) {
      const Mat& G2 = t.val(g);
      Mat &ga = t.grad(a), &gg = t.grad(g), &gb = t.grad(b);
      const int cols = n.grad.cols;
      for (int r = 0; r < n.grad.rows; ++r) {
        const double* dy = n.grad.row_ptr(r);
        const double* xh = xh_keep->row_ptr(r);
        double sum_dxhat = 0.0, sum_dxhat_xhat = 0.0;
        for (int j = 0; j < cols; ++j) {
          double dxhat = dy[j] * G2.at(0, j);
          sum_dxhat += dxhat;
          sum_dxhat_xhat += dxhat * xh[j];
          gg.at(0, j) += dy[j] * xh[j];
          gb.at(0, j) += dy[j];
        }
        double is = (*is_keep)[r];
        double* out = ga.row_ptr(r);
        for (int j = 0; j < cols; ++j) {
          double dxhat = dy[j] * G2.at(0, j);
          out[j] += is * (dxhat - (sum_dxhat + xh[j] * sum_dxhat_xhat) / cols);
        }
      }
    });
  }

  Var sum_all(Var a) {
    double s = 0.0;
    for (double v : val(a).a) s += v;
    Mat C(1, 1);
    C.a[0] = s;
    return push(std::move(C), [a](Tape& t, const Node& n) {
      Mat& ga = t.grad(a);
      for (double& v : ga.a) v += n.grad.a[0];
    });
  }

  // Summed binary cross entropy over probabilities clamped to [eps, 1-eps].
  // probs and labels share one shape; labels are 0/1 constants.
  Var bce_sum(Var probs, const Mat& labels, double eps = 1e-7) {
    const Mat& P = val(probs);
    if (!P.same_shape(labels)) throw std::invalid_argument("bce_sum shape mismatch");
    double acc = 0.0;
    for (size_t i = 0; i < P.size(); ++i) {
      double p = std::min(1.0 - eps, std::max(eps, P.a[i]));
      double y = labels.a[i];
      acc -= y * std::log(p) + (1.0 - y) * std::log(1.0 - p);
    }
    Mat C(1, 1);
    C.a[0] = acc;
    Mat lab = labels;
    return push(std::move(C), [probs, lab, eps](Tape& t, const Node& n) {
      const Mat& P2 = t.val(probs);
      Mat& gp = t.grad(probs);
      for (size_t i = 0; i < P2.size(); ++i) {
        double raw = P2.a[i];
        if (raw <= eps || raw >= 1.0 - eps) continue;  // clamped region has zero slope
        double y = lab.a[i];
        gp.a[i] += n.grad.a[0] * (-(y / raw) + (1.0 - y) / (1.0 - raw));
      }
    });
  }

  // Cross entropy of a single row of logits against a gold class index,
  // computed as logsumexp(z) - z[gold].
  Var softmax_ce(Var logits, int gold) {
    const Mat& Z = val(logits);
    if (Z.rows != 1) throw std::invalid_argument("softmax_ce expects one row");
    if (gold < 0 || gold >= Z.cols) throw std::invalid_argument("softmax_ce gold out of range");
    double mx = Z.a[0];
    for (int j = 1; j < Z.cols; ++j) mx = std::max(mx, Z.a[j]);
    double z = 0.0;
    for (int j = 0; j < Z.cols; ++j) z += std::exp(Z.a[j] - mx);
    double lse = mx + std::log(z);
    Mat C(1, 1);
    C.a[0] = lse - Z.a[gold];
    return push(std::move(C), [logits, gold, lse](Tape& t, const Node& n) {
      const Mat& Z2 = t.val(logits);
      Mat& gz = t.grad(logits);
      for (int j = 0; j < Z2.cols; ++j) {
        double soft = std::exp(Z2.a[j] - lse);
        gz.a[j] += n.grad.a[0] * (soft - (j == gold ? 1.0 : 0.0));
      }
    });
  }

  // Seeds d(loss)/d(loss) = 1 and accumulates into every reachable node,
  // flushing parameter leaves into their bound external grads.
  void backward(Var loss) {
    const Mat& L = val(loss);
    if (L.rows != 1 || L.cols != 1) throw std::invalid_argument("backward needs a scalar loss");
    for (Node& n : nodes) {
      n.grad = Mat(n.val.rows, n.val.cols);
    }
    nodes[loss.idx].grad.a[0] = 1.0;
    for (int i = loss.idx; i >= 0; --i) {
      Node& n = nodes[i];
      if (n.back) n.back(*this, n);
      if (n.bound_grad) {
        if (!n.bound_grad->same_shape(n.grad)) *n.bound_grad = Mat(n.grad.rows, n.grad.cols);
        for (size_t k = 0; k < n.grad.size(); ++k) n.bound_grad->a[k] += n.grad.a[k];
      }
    }
  }

 private:
  Var push(Mat v, std::function<void(Tape&, const Node&)> back) {
    Node n;
    n.val = std::move(v);
    n.back = std::move(back);
    nodes.push_back(std::move(n));
    return Var{this, static_cast<int>(nodes.size()) - 1};
  }
};

}  // namespace factver
