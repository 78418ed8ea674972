#pragma once
// Dense row-major double matrix. Row-vector convention throughout: hidden
// states are rows, parameters multiply on the right (y = x * W).

#include <cassert>
#include <cmath>
#include <cstddef>
#include <random>
#include <stdexcept>
#include <vector>

namespace factver {

struct Mat {
  int rows = 0;
  int cols = 0;
  std::vector<double> a;

  Mat() = default;
  Mat(int r, int c) : rows(r), cols(c), a(static_cast<size_t>(r) * c, 0.0) {}

  double& at(int r, int c) { return a[static_cast<size_t>(r) * cols + c]; }
  double at(int r, int c) const { return a[static_cast<size_t>(r) * cols + c]; }
  double* row_ptr(int r) { return a.data() + static_cast<size_t>(r) * cols; }
  const double* row_ptr(int r) const { return a.data() + static_cast<size_t>(r) * cols; }

  size_t size() const { return a.size(); }
  bool same_shape(const Mat& o) const { return rows == o.rows && cols == o.cols; }

  void fill(double v) { std::fill(a.begin(), a.end(), v); }
  void zero() { fill(0.0); }

  bool all_finite() const {
    for (double v : a)
      if (!std::isfinite(v)) return false;
    return true;
  }

  static Mat identity(int n) {
    Mat m(n, n);
    for (int i = 0; i < n; ++i) m.at(i, i) = 1.0;
    return m;
  }
};

// C += A * B
inline void mm_nn_acc(const Mat& A, const Mat& B, Mat& C) {
  assert(A.cols == B.rows && C.rows == A.rows && C.cols == B.cols);
  const int n = A.rows, k = A.cols, m = B.cols;
  for (int i = 0; i < n; ++i) {
    double* ci = C.row_ptr(i);
    const double* ai = A.row_ptr(i);
    for (int p = 0; p < k; ++p) {
      const double aip = ai[p];
      if (aip == 0.0) continue;
      const double* bp = B.row_ptr(p);
      for (int j = 0; j < m; ++j) ci[j] += aip * bp[j];
    }
  }
}

inline Mat mm_nn(const Mat& A, const Mat& B) {
  Mat C(A.rows, B.cols);
  mm_nn_acc(A, B, C);
  return C;
}

// C += A * B^T
inline void mm_nt_acc(const Mat& A, const Mat& B, Mat& C) {
  assert(A.cols == B.cols && C.rows == A.rows && C.cols == B.rows);
  for (int i = 0; i < A.rows; ++i) {
    const double* ai = A.row_ptr(i);
    double* ci = C.row_ptr(i);
    for (int j = 0; j < B.rows; ++j) {
      const double* bj = B.row_ptr(j);
      double s = 0.0;
      for (int p = 0; p < A.cols; ++p) s += ai[p] * bj[p];
      ci[j] += s;
    }
  }
}

inline Mat mm_nt(const Mat& A, const Mat& B) {
  Mat C(A.rows, B.rows);
  mm_nt_acc(A, B, C);
  return C;
}

// C += A^T * B
inline void mm_tn_acc(const Mat& A, const Mat& B, Mat& C) {
  assert(A.rows == B.rows && C.rows == A.cols && C.cols == B.cols);
  for (int p = 0; p < A.rows; ++p) {
    const double* ap = A.row_ptr(p);
    const double* bp = B.row_ptr(p);
    for (int i = 0; i < A.cols; ++i) {
      const double api = ap[i];
      if (api == 0.0) continue;
      double* ci = C.row_ptr(i);
      for (int j = 0; j < B.cols; ++j) ci[j] += api * bp[j];
    }
  }
}

inline double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  double e = std::exp(x);
  return e / (1.0 + e);
}

// Glorot uniform; deterministic given the generator state.
inline void init_xavier(Mat& m, std::mt19937_64& rng) {
  double bound = std::sqrt(6.0 / (m.rows + m.cols));
  std::uniform_real_distribution<double> dist(-bound, bound);
  for (double& v : m.a) v = dist(rng);
}

inline void init_normal(Mat& m, std::mt19937_64& rng, double stddev) {
  std::normal_distribution<double> dist(0.0, stddev);
  for (double& v : m.a) v = dist(rng);
}

}  // namespace factver
