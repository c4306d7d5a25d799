#pragma once

#include <cmath>
#include <cstdint>

#include <Eigen/Core>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace anchormt::num {

// GEMM primitives backed by Eigen maps. Accumulation order is fixed for
// given operand sizes, so results are reproducible run to run.

template <class S>
using MatMap = Eigen::Map<Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;
template <class S>
using ConstMatMap =
    Eigen::Map<const Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;

// C (M,N) = A (M,K) * B (K,N), += when acc
template <class S>
void gemm_nn(const S* A, const S* B, S* C, int M, int K, int N, bool acc = false) {
  ConstMatMap<S> a(A, M, K);
  ConstMatMap<S> b(B, K, N);
  MatMap<S> c(C, M, N);
  if (acc)
    c.noalias() += a * b;
  else
    c.noalias() = a * b;
}

// C (M,N) = A (M,K) * B^T, B stored (N,K)
template <class S>
void gemm_nt(const S* A, const S* B, S* C, int M, int K, int N, bool acc = false) {
  ConstMatMap<S> a(A, M, K);
  ConstMatMap<S> b(B, N, K);
  MatMap<S> c(C, M, N);
  if (acc)
    c.noalias() += a * b.transpose();
  else
    c.noalias() = a * b.transpose();
}

// C (K,N) = A^T * B with A stored (M,K), B (M,N)
template <class S>
void gemm_tn(const S* A, const S* B, S* C, int M, int K, int N, bool acc = false) {
  ConstMatMap<S> a(A, M, K);
  ConstMatMap<S> b(B, M, N);
  MatMap<S> c(C, K, N);
  if (acc)
    c.noalias() += a.transpose() * b;
  else
    c.noalias() = a.transpose() * b;
}

// In-place numerically stable softmax over a length-n row.
template <class S>
void softmax_row(S* x, int n) {
  S mx = x[0];
  for (int i = 1; i < n; ++i) mx = x[i] > mx ? x[i] : mx;
  S sum = S(0);
  for (int i = 0; i < n; ++i) {
    x[i] = std::exp(x[i] - mx);
    sum += x[i];
  }
  const S inv = S(1) / sum;
  for (int i = 0; i < n; ++i) x[i] *= inv;
}

inline constexpr int64_t kParThreshold = 1 << 16;

}  // namespace anchormt::num
