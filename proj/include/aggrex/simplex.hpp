#pragma once

#include "aggrex/matrix.hpp"
#include "aggrex/rng.hpp"

namespace aggrex {

// Euclidean projection onto {x >= 0, sum x = 1} by the sort-and-threshold
// rule: descending sort, pivot l = max{ j : sum_{k<j} (y_(k) - y_(j)) < 1 },
// shift eta = (1 - sum_{k<=l} y_(k)) / l, clamp at zero.
ProbVector project_simplex(const double* y, std::size_t p);
ProbVector project_simplex(const Vec& y);

DenseMatrix project_row_stochastic(const DenseMatrix& A);
DenseMatrix project_col_stochastic(const DenseMatrix& A);
void project_rows_inplace(DenseMatrix& A);
void project_cols_inplace(DenseMatrix& A);

// Uniform draw from {v >= 0, ||v||_2 = 1}: absolute Gaussians, normalized.
Vec sample_unit_nonneg(RngStream& rng, std::size_t d);

namespace serial {
DenseMatrix project_row_stochastic(const DenseMatrix& A);
DenseMatrix project_col_stochastic(const DenseMatrix& A);
}  // namespace serial

}  // namespace aggrex
