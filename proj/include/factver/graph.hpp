#pragma once
// Dual evidence fusion graph. Each evidence sentence contributes two nodes
// (its intra-document and inter-document representations), and three
// relations connect nodes pairwise:
//   1. Common Document: the evidences come from the same document.
//   2. Common Keyword: the evidences' keyword sets intersect.
//   3. Claim Jump: both evidences share at least one keyword with the claim.
// Relation matrices are row-normalized; self-loops are excluded because the
// node's own state flows through the W_0 term of the layer update.
//
// Layer update (gated message passing):
//   U = H W_0 + sum_j A_j H W_j
//   G = sigmoid([U, H] W_g)
//   H_next = relu(U) .* G + H .* (1 - G)

#include <set>
#include <string>
#include <vector>

#include "factver/autodiff.hpp"
#include "factver/errors.hpp"
#include "factver/mat.hpp"

namespace factver {

struct DualEvidenceGraph {
  int n_evidence = 0;  // N; the graph has 2N nodes
  Mat a1, a2, a3;      // 2N x 2N, row-normalized

  int nodes() const { return 2 * n_evidence; }
};

namespace detail {

inline bool sets_intersect(const std::set<std::string>& a, const std::set<std::string>& b) {
  const std::set<std::string>& small = a.size() <= b.size() ? a : b;
  const std::set<std::string>& big = a.size() <= b.size() ? b : a;
  for (const std::string& s : small)
    if (big.count(s)) return true;
  return false;
}

inline void row_normalize(Mat& m) {
  for (int r = 0; r < m.rows; ++r) {
    double sum = 0.0;
    for (int c = 0; c < m.cols; ++c) sum += m.at(r, c);
    if (sum > 0.0)
      for (int c = 0; c < m.cols; ++c) m.at(r, c) /= sum;
  }
}

}  // namespace detail

// Builds the three relation matrices. Node i and node N+i both inherit
// evidence i's document and keywords; h0 is only validated for shape (the
// adjacency depends on evidence attributes alone).
inline DualEvidenceGraph build_graph(const std::vector<std::string>& evidence_docs,
                                     const std::vector<std::set<std::string>>& evidence_keywords,
                                     const std::set<std::string>& claim_keywords, const Mat& h0) {
  const int n = static_cast<int>(evidence_docs.size());
  if (static_cast<int>(evidence_keywords.size()) != n)
    throw InputError("build_graph: keyword list size disagrees with evidence count");
  if (h0.rows != 2 * n)
    throw InputError("build_graph: node matrix has " + std::to_string(h0.rows) +
                     " rows, expected " + std::to_string(2 * n));
  DualEvidenceGraph g;
  g.n_evidence = n;
  const int nodes = 2 * n;
  g.a1 = Mat(nodes, nodes);
  g.a2 = Mat(nodes, nodes);
  g.a3 = Mat(nodes, nodes);
  auto ev = [n](int node) { return node < n ? node : node - n; };
  for (int u = 0; u < nodes; ++u) {
    for (int w = u + 1; w < nodes; ++w) {
      const int eu = ev(u), ew = ev(w);
      if (evidence_docs[eu] == evidence_docs[ew]) {
        g.a1.at(u, w) = g.a1.at(w, u) = 1.0;
      }
      if (detail::sets_intersect(evidence_keywords[eu], evidence_keywords[ew])) {
        g.a2.at(u, w) = g.a2.at(w, u) = 1.0;
      }
      if (detail::sets_intersect(evidence_keywords[eu], claim_keywords) &&
          detail::sets_intersect(evidence_keywords[ew], claim_keywords)) {
        g.a3.at(u, w) = g.a3.at(w, u) = 1.0;
      }
    }
  }
  detail::row_normalize(g.a1);
  detail::row_normalize(g.a2);
  detail::row_normalize(g.a3);
  return g;
}

struct GraphLayerVars {
  Var w0, w1, w2, w3, wg;
};

// One gated message-passing layer over the tape. Throws if the update
// produces non-finite values (training instability must surface, not hide).
inline Var graph_layer(Tape& tape, Var h, const DualEvidenceGraph& graph,
                       const GraphLayerVars& p) {
  Var u = tape.matmul(h, p.w0);
  u = tape.add(u, tape.matmul(tape.matmul(tape.constant(graph.a1), h), p.w1));
  u = tape.add(u, tape.matmul(tape.matmul(tape.constant(graph.a2), h), p.w2));
  u = tape.add(u, tape.matmul(tape.matmul(tape.constant(graph.a3), h), p.w3));
  Var gate = tape.sigmoid_op(tape.matmul(tape.concat_cols({u, h}), p.wg));
  Var next = tape.add(tape.mul(tape.relu(u), gate), tape.mul(h, tape.one_minus(gate)));
  if (!tape.val(next).all_finite())
    throw StageError("graph_layer", "non-finite node state after update");
  return next;
}

}  // namespace factver
