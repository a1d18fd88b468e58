#include "aggrex/svd.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "aggrex/errors.hpp"

namespace aggrex {

namespace {

// One-sided Jacobi on the columns of W (m x n, m >= n). Returns V (n x n)
// with A V = W at convergence, W having orthogonal columns.
void one_sided_jacobi(DenseMatrix& W, DenseMatrix& V) {
  const std::size_t m = W.rows(), n = W.cols();
  const double tol = 1e-14;
  for (int sweep = 0; sweep < 60; ++sweep) {
    double off = 0.0;
    for (std::size_t p = 0; p + 1 < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        double app = 0, aqq = 0, apq = 0;
        for (std::size_t i = 0; i < m; ++i) {
          const double wp = W(i, p), wq = W(i, q);
          app += wp * wp;
          aqq += wq * wq;
          apq += wp * wq;
        }
        const double denom = std::sqrt(app * aqq);
        if (denom == 0.0 || std::fabs(apq) <= tol * denom) continue;
        off = std::max(off, std::fabs(apq) / denom);

        const double zeta = (aqq - app) / (2.0 * apq);
        const double t = (zeta >= 0 ? 1.0 : -1.0) /
                         (std::fabs(zeta) + std::sqrt(1.0 + zeta * zeta));
        const double c = 1.0 / std::sqrt(1.0 + t * t);
        const double s = c * t;
        for (std::size_t i = 0; i < m; ++i) {
          const double wp = W(i, p), wq = W(i, q);
          W(i, p) = c * wp - s * wq;
          W(i, q) = s * wp + c * wq;
        }
        for (std::size_t i = 0; i < n; ++i) {
          const double vp = V(i, p), vq = V(i, q);
          V(i, p) = c * vp - s * vq;
          V(i, q) = s * vp + c * vq;
        }
      }
    }
    if (off == 0.0) break;
  }
}

// Fill column j of U with a unit vector orthogonal to columns done[0..j)
void orthonormal_fill(DenseMatrix& U, std::size_t j) {
  const std::size_t m = U.rows();
  for (std::size_t attempt = 0; attempt < m; ++attempt) {
    Vec cand(m, 0.0);
    cand[attempt] = 1.0;
    for (std::size_t t = 0; t < j; ++t) {
      double proj = 0.0;
      for (std::size_t i = 0; i < m; ++i) proj += cand[i] * U(i, t);
      for (std::size_t i = 0; i < m; ++i) cand[i] -= proj * U(i, t);
    }
    double nrm = 0.0;
    for (double v : cand) nrm += v * v;
    nrm = std::sqrt(nrm);
    if (nrm > 1e-8) {
      for (std::size_t i = 0; i < m; ++i) U(i, j) = cand[i] / nrm;
      return;
    }
  }
  throw NumericError("thin_svd: could not complete orthonormal basis");
}

}  // namespace

ThinSvd thin_svd(const DenseMatrix& A, std::size_t k) {
  const std::size_t m = A.rows(), n = A.cols();
  if (k < 1 || k > std::min(m, n)) throw InputError("thin_svd: k out of range");
  if (!all_finite(A)) throw InputError("thin_svd: non-finite input");

  if (m < n) {  // transpose, swap factors back afterwards
    DenseMatrix At(n, m);
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < n; ++j) At(j, i) = A(i, j);
    ThinSvd t = thin_svd(At, k);
    return ThinSvd{std::move(t.V), std::move(t.sigma), std::move(t.U)};
  }

  DenseMatrix W = A;
  DenseMatrix V = DenseMatrix::identity(n);
  one_sided_jacobi(W, V);

  Vec sig(n, 0.0);
  for (std::size_t j = 0; j < n; ++j) {
    double s = 0.0;
    for (std::size_t i = 0; i < m; ++i) s += W(i, j) * W(i, j);
    sig[j] = std::sqrt(s);
  }
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return sig[a] > sig[b]; });

  ThinSvd out;
  out.U = DenseMatrix(m, k);
  out.V = DenseMatrix(n, k);
  out.sigma.resize(k);
  const double tiny = 1e-300;
  for (std::size_t t = 0; t < k; ++t) {
    const std::size_t j = order[t];
    out.sigma[t] = sig[j];
    for (std::size_t i = 0; i < n; ++i) out.V(i, t) = V(i, j);
    if (sig[j] > tiny) {
      for (std::size_t i = 0; i < m; ++i) out.U(i, t) = W(i, j) / sig[j];
    } else {
      orthonormal_fill(out.U, t);
    }
  }
  return out;
}

SymEigen jacobi_eigen_sym(const DenseMatrix& S) {
  const std::size_t n = S.rows();
  if (n != S.cols()) throw NumericError("jacobi_eigen_sym: not square");
  DenseMatrix A = S;
  DenseMatrix Q = DenseMatrix::identity(n);

  for (int sweep = 0; sweep < 100; ++sweep) {
    double off = 0.0;
    for (std::size_t p = 0; p + 1 < n; ++p)
      for (std::size_t q = p + 1; q < n; ++q) off += A(p, q) * A(p, q);
    if (off < 1e-30) break;
    for (std::size_t p = 0; p + 1 < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        const double apq = A(p, q);
        if (std::fabs(apq) < 1e-300) continue;
        const double theta = (A(q, q) - A(p, p)) / (2.0 * apq);
        const double t = (theta >= 0 ? 1.0 : -1.0) /
                         (std::fabs(theta) + std::sqrt(1.0 + theta * theta));
        const double c = 1.0 / std::sqrt(1.0 + t * t);
        const double s = c * t;
        for (std::size_t i = 0; i < n; ++i) {
          const double aip = A(i, p), aiq = A(i, q);
          A(i, p) = c * aip - s * aiq;
          A(i, q) = s * aip + c * aiq;
        }
        for (std::size_t i = 0; i < n; ++i) {
          const double api = A(p, i), aqi = A(q, i);
          A(p, i) = c * api - s * aqi;
          A(q, i) = s * api + c * aqi;
        }
        for (std::size_t i = 0; i < n; ++i) {
          const double qip = Q(i, p), qiq = Q(i, q);
          Q(i, p) = c * qip - s * qiq;
          Q(i, q) = s * qip + c * qiq;
        }
      }
    }
  }

  SymEigen out;
  out.values.resize(n);
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  Vec diag(n);
  for (std::size_t i = 0; i < n; ++i) diag[i] = A(i, i);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return diag[a] < diag[b]; });
  out.vecs = DenseMatrix(n, n);
  for (std::size_t t = 0; t < n; ++t) {
    out.values[t] = diag[order[t]];
    for (std::size_t i = 0; i < n; ++i) out.vecs(i, t) = Q(i, order[t]);
  }
  return out;
}

}  // namespace aggrex
