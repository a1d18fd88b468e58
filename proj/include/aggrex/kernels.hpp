#pragma once

#include <cstddef>

#include "aggrex/matrix.hpp"

namespace aggrex {

// Deterministic reduction: fixed-size blocks summed in block order, so the
// result is bit-identical for any thread count (and with OpenMP disabled).
inline constexpr std::size_t kSumBlock = 4096;

template <class F>
double blocked_sum(std::size_t n, F&& term) {
  if (n == 0) return 0.0;
  const std::size_t nb = (n + kSumBlock - 1) / kSumBlock;
  Vec partial(nb, 0.0);
#pragma omp parallel for schedule(static) if (nb > 1)
  for (std::ptrdiff_t b = 0; b < static_cast<std::ptrdiff_t>(nb); ++b) {
    const std::size_t lo = static_cast<std::size_t>(b) * kSumBlock;
    const std::size_t hi = lo + kSumBlock < n ? lo + kSumBlock : n;
    double s = 0.0;
    for (std::size_t i = lo; i < hi; ++i) s += term(i);
    partial[static_cast<std::size_t>(b)] = s;
  }
  double total = 0.0;
  for (double s : partial) total += s;
  return total;
}

// OpenMP kernels (the production path).
DenseMatrix matmul_nt(const DenseMatrix& A, const DenseMatrix& B);  // A * B^T
DenseMatrix matmul_nn(const DenseMatrix& A, const DenseMatrix& B);  // A * B
DenseMatrix matmul_tn(const DenseMatrix& A, const DenseMatrix& B);  // A^T * B

double dot(const Vec& a, const Vec& b);
double dot(const DenseMatrix& A, const DenseMatrix& B);  // <A, B>_F
double frob_sq(const DenseMatrix& A);
double frob_norm(const DenseMatrix& A);

// ||diag(w) A||_F
double weighted_frobenius(const DenseMatrix& A, const ProbVector& w);

Vec col_norms(const DenseMatrix& A);
Vec row_sums(const DenseMatrix& A);
Vec col_sums(const DenseMatrix& A);

// B = diag(w) * A and A * diag(w)
DenseMatrix scale_rows(const DenseMatrix& A, const Vec& w);
DenseMatrix scale_cols(const DenseMatrix& A, const Vec& w);

// C = A - B elementwise; axpy C = A + t*B
DenseMatrix subtract(const DenseMatrix& A, const DenseMatrix& B);
DenseMatrix add_scaled(const DenseMatrix& A, double t, const DenseMatrix& B);

// Plain-loop reference implementations kept for testing and benchmarking.
namespace serial {
DenseMatrix matmul_nt(const DenseMatrix& A, const DenseMatrix& B);
DenseMatrix matmul_nn(const DenseMatrix& A, const DenseMatrix& B);
DenseMatrix matmul_tn(const DenseMatrix& A, const DenseMatrix& B);
double weighted_frobenius(const DenseMatrix& A, const ProbVector& w);
}  // namespace serial

}  // namespace aggrex
