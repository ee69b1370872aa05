#pragma once

#include <cstddef>
#include <vector>

#include "pcfpr/errors.hpp"

// Small dense row-major matrices and the three GEMM shapes the network needs.
// Summation order is fixed (multi-accumulator dot, axpy row sweeps) so results
// are bit-stable run to run without sacrificing -O3 throughput.

namespace pcfpr {

template <typename T>
struct Mat {
  int rows = 0, cols = 0;
  std::vector<T> a;

  Mat() = default;
  Mat(int r, int c) : rows(r), cols(c), a(static_cast<std::size_t>(r) * c, T(0)) {}

  T& operator()(int i, int j) { return a[static_cast<std::size_t>(i) * cols + j]; }
  const T& operator()(int i, int j) const { return a[static_cast<std::size_t>(i) * cols + j]; }

  T* row(int i) { return a.data() + static_cast<std::size_t>(i) * cols; }
  const T* row(int i) const { return a.data() + static_cast<std::size_t>(i) * cols; }

  void zero() { a.assign(a.size(), T(0)); }
  bool empty() const { return a.empty(); }

  bool operator==(const Mat&) const = default;
};

namespace detail {

template <typename T>
inline T dot_fixed(const T* a, const T* b, int n) {
  T s0{}, s1{}, s2{}, s3{};
  int i = 0;
  for (; i + 4 <= n; i += 4) {
    s0 += a[i] * b[i];
    s1 += a[i + 1] * b[i + 1];
    s2 += a[i + 2] * b[i + 2];
    s3 += a[i + 3] * b[i + 3];
  }
  for (; i < n; ++i) s0 += a[i] * b[i];
  return (s0 + s1) + (s2 + s3);
}

template <typename T>
inline void axpy(T alpha, const T* x, T* y, int n) {
  for (int i = 0; i < n; ++i) y[i] += alpha * x[i];
}

}  // namespace detail

// C (+)= A * B^T ; A is m*k, B is n*k, C is m*n. The forward shape Y = X*W^T.
template <typename T>
void gemm_nt(const Mat<T>& A, const Mat<T>& B, Mat<T>& C, bool accumulate = false) {
  require(A.cols == B.cols && C.rows == A.rows && C.cols == B.rows, Errc::bad_config,
          "gemm_nt: shape mismatch");
  if (!accumulate) C.zero();
  for (int i = 0; i < A.rows; ++i) {
    const T* ai = A.row(i);
    T* ci = C.row(i);
    for (int j = 0; j < B.rows; ++j) ci[j] += detail::dot_fixed(ai, B.row(j), A.cols);
  }
}

// C (+)= A * B ; A is m*k, B is k*n, C is m*n. The backward shape dX = dY*W.
template <typename T>
void gemm_nn(const Mat<T>& A, const Mat<T>& B, Mat<T>& C, bool accumulate = false) {
  require(A.cols == B.rows && C.rows == A.rows && C.cols == B.cols, Errc::bad_config,
          "gemm_nn: shape mismatch");
  if (!accumulate) C.zero();
  for (int i = 0; i < A.rows; ++i) {
    T* ci = C.row(i);
    const T* ai = A.row(i);
    for (int l = 0; l < A.cols; ++l) detail::axpy(ai[l], B.row(l), ci, B.cols);
  }
}

// C (+)= A^T * B ; A is m*r, B is m*c, C is r*c. The backward shape dW = dY^T*X.
template <typename T>
void gemm_tn(const Mat<T>& A, const Mat<T>& B, Mat<T>& C, bool accumulate = false) {
  require(A.rows == B.rows && C.rows == A.cols && C.cols == B.cols, Errc::bad_config,
          "gemm_tn: shape mismatch");
  if (!accumulate) C.zero();
  for (int i = 0; i < A.rows; ++i) {
    const T* ai = A.row(i);
    const T* bi = B.row(i);
    for (int l = 0; l < A.cols; ++l) detail::axpy(ai[l], bi, C.row(l), B.cols);
  }
}

}  // namespace pcfpr
