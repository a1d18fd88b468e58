#include "aggrex/simplex.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "aggrex/errors.hpp"

namespace aggrex {

ProbVector project_simplex(const double* y, std::size_t p) {
  if (p == 0) throw NumericError("project_simplex: empty input");
  if (!all_finite(y, p)) throw InputError("project_simplex: non-finite input");

  // Already a probability vector (within the ProbVector tolerance): return it
  // unchanged. Without this branch roundoff in the shift makes the projection
  // fail exact idempotence on its own outputs.
  {
    double sum = 0.0;
    bool nonneg = true;
    for (std::size_t i = 0; i < p; ++i) {
      if (y[i] < 0.0) {
        nonneg = false;
        break;
      }
      sum += y[i];
    }
    if (nonneg && std::fabs(sum - 1.0) <= 1e-12) return ProbVector(y, y + p);
  }

  // stable descending sort fixes tie order by original index
  std::vector<std::size_t> idx(p);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::stable_sort(idx.begin(), idx.end(),
                   [&](std::size_t a, std::size_t b) { return y[a] > y[b]; });

  // l = max{ j : sum_{k<j} (y_(k) - y_(j)) < 1 }; prefix sums make the test O(1)
  std::size_t l = 1;
  double prefix = y[idx[0]];
  for (std::size_t j = 2; j <= p; ++j) {
    const double yj = y[idx[j - 1]];
    if (prefix - static_cast<double>(j - 1) * yj < 1.0) {
      l = j;
      prefix += yj;
    } else {
      break;
    }
  }
  const double eta = (1.0 - prefix) / static_cast<double>(l);

  ProbVector x(p);
  for (std::size_t i = 0; i < p; ++i) x[i] = std::max(0.0, y[i] + eta);
  return x;
}

ProbVector project_simplex(const Vec& y) { return project_simplex(y.data(), y.size()); }

DenseMatrix project_row_stochastic(const DenseMatrix& A) {
  DenseMatrix B = A;
  project_rows_inplace(B);
  return B;
}

DenseMatrix project_col_stochastic(const DenseMatrix& A) {
  DenseMatrix B = A;
  project_cols_inplace(B);
  return B;
}

void project_rows_inplace(DenseMatrix& A) {
  if (A.cols() == 0) throw NumericError("project_rows_inplace: zero columns");
  if (!all_finite(A)) throw InputError("project_rows_inplace: non-finite input");
#pragma omp parallel for schedule(static) if (A.rows() > 8)
  for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(A.rows()); ++i) {
    double* r = A.row(static_cast<std::size_t>(i));
    ProbVector x = project_simplex(r, A.cols());
    std::copy(x.begin(), x.end(), r);
  }
  return;
}

void project_cols_inplace(DenseMatrix& A) {
  if (A.rows() == 0) throw NumericError("project_cols_inplace: zero rows");
  if (!all_finite(A)) throw InputError("project_cols_inplace: non-finite input");
  const std::size_t m = A.rows(), n = A.cols();
#pragma omp parallel for schedule(static) if (n > 8)
  for (std::ptrdiff_t j = 0; j < static_cast<std::ptrdiff_t>(n); ++j) {
    Vec col(m);
    for (std::size_t i = 0; i < m; ++i) col[i] = A(i, static_cast<std::size_t>(j));
    ProbVector x = project_simplex(col);
    for (std::size_t i = 0; i < m; ++i) A(i, static_cast<std::size_t>(j)) = x[i];
  }
}

Vec sample_unit_nonneg(RngStream& rng, std::size_t d) {
  if (d == 0) throw NumericError("sample_unit_nonneg: d = 0");
  Vec v(d);
  double norm_sq = 0.0;
  do {
    norm_sq = 0.0;
    for (std::size_t i = 0; i < d; ++i) {
      v[i] = std::fabs(rng.gaussian());
      norm_sq += v[i] * v[i];
    }
  } while (norm_sq == 0.0);
  const double inv = 1.0 / std::sqrt(norm_sq);
  for (double& x : v) x *= inv;
  return v;
}

namespace serial {

DenseMatrix project_row_stochastic(const DenseMatrix& A) {
  DenseMatrix B(A.rows(), A.cols());
  for (std::size_t i = 0; i < A.rows(); ++i) {
    ProbVector x = aggrex::project_simplex(A.row(i), A.cols());
    std::copy(x.begin(), x.end(), B.row(i));
  }
  return B;
}

DenseMatrix project_col_stochastic(const DenseMatrix& A) {
  DenseMatrix B(A.rows(), A.cols());
  for (std::size_t j = 0; j < A.cols(); ++j) {
    Vec col(A.rows());
    for (std::size_t i = 0; i < A.rows(); ++i) col[i] = A(i, j);
    ProbVector x = aggrex::project_simplex(col);
    for (std::size_t i = 0; i < A.rows(); ++i) B(i, j) = x[i];
  }
  return B;
}

}  // namespace serial

}  // namespace aggrex
