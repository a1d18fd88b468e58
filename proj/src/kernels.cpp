#include "aggrex/kernels.hpp"

#include <cmath>

#include "aggrex/errors.hpp"

namespace aggrex {

namespace {
void check_dims(bool ok, const char* what) {
  if (!ok) throw NumericError(std::string("dimension mismatch in ") + what);
}
}  // namespace

DenseMatrix matmul_nt(const DenseMatrix& A, const DenseMatrix& B) {
  check_dims(A.cols() == B.cols(), "matmul_nt");
  const std::size_t m = A.rows(), n = B.rows(), k = A.cols();
  DenseMatrix C(m, n);
#pragma omp parallel for schedule(static) if (m * n * k > 16384)
  for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(m); ++i) {
    const double* ai = A.row(static_cast<std::size_t>(i));
    double* ci = C.row(static_cast<std::size_t>(i));
    for (std::size_t j = 0; j < n; ++j) {
      const double* bj = B.row(j);
      double s = 0.0;
      for (std::size_t t = 0; t < k; ++t) s += ai[t] * bj[t];
      ci[j] = s;
    }
  }
  return C;
}

DenseMatrix matmul_nn(const DenseMatrix& A, const DenseMatrix& B) {
  check_dims(A.cols() == B.rows(), "matmul_nn");
  const std::size_t m = A.rows(), n = B.cols(), k = A.cols();
  DenseMatrix C(m, n);
#pragma omp parallel for schedule(static) if (m * n * k > 16384)
  for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(m); ++i) {
    const double* ai = A.row(static_cast<std::size_t>(i));
    double* ci = C.row(static_cast<std::size_t>(i));
    for (std::size_t t = 0; t < k; ++t) {
      const double a = ai[t];
      if (a == 0.0) continue;
      const double* bt = B.row(t);
      for (std::size_t j = 0; j < n; ++j) ci[j] += a * bt[j];
    }
  }
  return C;
}

DenseMatrix matmul_tn(const DenseMatrix& A, const DenseMatrix& B) {
  check_dims(A.rows() == B.rows(), "matmul_tn");
  const std::size_t m = A.cols(), n = B.cols(), k = A.rows();
  DenseMatrix C(m, n);
#pragma omp parallel for schedule(static) if (m * n * k > 16384)
  for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(m); ++i) {
    double* ci = C.row(static_cast<std::size_t>(i));
    for (std::size_t t = 0; t < k; ++t) {
      const double a = A(t, static_cast<std::size_t>(i));
      if (a == 0.0) continue;
      const double* bt = B.row(t);
      for (std::size_t j = 0; j < n; ++j) ci[j] += a * bt[j];
    }
  }
  return C;
}

double dot(const Vec& a, const Vec& b) {
  check_dims(a.size() == b.size(), "dot");
  return blocked_sum(a.size(), [&](std::size_t i) { return a[i] * b[i]; });
}

double dot(const DenseMatrix& A, const DenseMatrix& B) {
  check_dims(A.rows() == B.rows() && A.cols() == B.cols(), "dot");
  const double* a = A.data();
  const double* b = B.data();
  return blocked_sum(A.size(), [&](std::size_t i) { return a[i] * b[i]; });
}

double frob_sq(const DenseMatrix& A) {
  const double* p = A.data();
  return blocked_sum(A.size(), [&](std::size_t i) { return p[i] * p[i]; });
}

double frob_norm(const DenseMatrix& A) { return std::sqrt(frob_sq(A)); }

double weighted_frobenius(const DenseMatrix& A, const ProbVector& w) {
  check_dims(w.size() == A.rows(), "weighted_frobenius");
  const std::size_t n = A.cols();
  double sq = blocked_sum(A.size(), [&](std::size_t i) {
    const double wi = w[i / n];
    const double v = A.data()[i];
    return wi * wi * v * v;
  });
  return std::sqrt(sq);
}

Vec col_norms(const DenseMatrix& A) {
  const std::size_t m = A.rows(), n = A.cols();
  Vec out(n, 0.0);
  for (std::size_t i = 0; i < m; ++i) {
    const double* ai = A.row(i);
    for (std::size_t j = 0; j < n; ++j) out[j] += ai[j] * ai[j];
  }
  for (double& v : out) v = std::sqrt(v);
  return out;
}

Vec row_sums(const DenseMatrix& A) {
  const std::size_t m = A.rows(), n = A.cols();
  Vec out(m, 0.0);
#pragma omp parallel for schedule(static) if (m * n > 16384)
  for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(m); ++i) {
    const double* ai = A.row(static_cast<std::size_t>(i));
    double s = 0.0;
    for (std::size_t j = 0; j < n; ++j) s += ai[j];
    out[static_cast<std::size_t>(i)] = s;
  }
  return out;
}

Vec col_sums(const DenseMatrix& A) {
  const std::size_t m = A.rows(), n = A.cols();
  Vec out(n, 0.0);
  for (std::size_t i = 0; i < m; ++i) {
    const double* ai = A.row(i);
    for (std::size_t j = 0; j < n; ++j) out[j] += ai[j];
  }
  return out;
}

DenseMatrix scale_rows(const DenseMatrix& A, const Vec& w) {
  check_dims(w.size() == A.rows(), "scale_rows");
  DenseMatrix B(A.rows(), A.cols());
#pragma omp parallel for schedule(static) if (A.size() > 16384)
  for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(A.rows()); ++i) {
    const double wi = w[static_cast<std::size_t>(i)];
    const double* ai = A.row(static_cast<std::size_t>(i));
    double* bi = B.row(static_cast<std::size_t>(i));
    for (std::size_t j = 0; j < A.cols(); ++j) bi[j] = wi * ai[j];
  }
  return B;
}

DenseMatrix scale_cols(const DenseMatrix& A, const Vec& w) {
  check_dims(w.size() == A.cols(), "scale_cols");
  DenseMatrix B(A.rows(), A.cols());
#pragma omp parallel for schedule(static) if (A.size() > 16384)
  for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(A.rows()); ++i) {
    const double* ai = A.row(static_cast<std::size_t>(i));
    double* bi = B.row(static_cast<std::size_t>(i));
    for (std::size_t j = 0; j < A.cols(); ++j) bi[j] = ai[j] * w[j];
  }
  return B;
}

DenseMatrix subtract(const DenseMatrix& A, const DenseMatrix& B) {
  check_dims(A.rows() == B.rows() && A.cols() == B.cols(), "subtract");
  DenseMatrix C(A.rows(), A.cols());
#pragma omp parallel for schedule(static) if (A.size() > 16384)
  for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(A.size()); ++i)
    C.data()[i] = A.data()[i] - B.data()[i];
  return C;
}

DenseMatrix add_scaled(const DenseMatrix& A, double t, const DenseMatrix& B) {
  check_dims(A.rows() == B.rows() && A.cols() == B.cols(), "add_scaled");
  DenseMatrix C(A.rows(), A.cols());
#pragma omp parallel for schedule(static) if (A.size() > 16384)
  for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(A.size()); ++i)
    C.data()[i] = A.data()[i] + t * B.data()[i];
  return C;
}

namespace serial {

DenseMatrix matmul_nt(const DenseMatrix& A, const DenseMatrix& B) {
  check_dims(A.cols() == B.cols(), "serial::matmul_nt");
  DenseMatrix C(A.rows(), B.rows());
  for (std::size_t i = 0; i < A.rows(); ++i)
    for (std::size_t j = 0; j < B.rows(); ++j) {
      double s = 0.0;
      for (std::size_t t = 0; t < A.cols(); ++t) s += A(i, t) * B(j, t);
      C(i, j) = s;
    }
  return C;
}

DenseMatrix matmul_nn(const DenseMatrix& A, const DenseMatrix& B) {
  check_dims(A.cols() == B.rows(), "serial::matmul_nn");
  DenseMatrix C(A.rows(), B.cols());
  for (std::size_t i = 0; i < A.rows(); ++i)
    for (std::size_t j = 0; j < B.cols(); ++j) {
      double s = 0.0;
      for (std::size_t t = 0; t < A.cols(); ++t) s += A(i, t) * B(t, j);
      C(i, j) = s;
    }
  return C;
}

DenseMatrix matmul_tn(const DenseMatrix& A, const DenseMatrix& B) {
  check_dims(A.rows() == B.rows(), "serial::matmul_tn");
  DenseMatrix C(A.cols(), B.cols());
  for (std::size_t i = 0; i < A.cols(); ++i)
    for (std::size_t j = 0; j < B.cols(); ++j) {
      double s = 0.0;
      for (std::size_t t = 0; t < A.rows(); ++t) s += A(t, i) * B(t, j);
      C(i, j) = s;
    }
  return C;
}

double weighted_frobenius(const DenseMatrix& A, const ProbVector& w) {
  check_dims(w.size() == A.rows(), "serial::weighted_frobenius");
  double sq = 0.0;
  for (std::size_t i = 0; i < A.rows(); ++i)
    for (std::size_t j = 0; j < A.cols(); ++j) {
      const double v = w[i] * A(i, j);
      sq += v * v;
    }
  return std::sqrt(sq);
}

}  // namespace serial

}  // namespace aggrex
