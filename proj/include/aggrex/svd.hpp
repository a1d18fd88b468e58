#pragma once

#include "aggrex/matrix.hpp"

namespace aggrex {

struct ThinSvd {
  DenseMatrix U;  // rows(A) x k, orthonormal columns
  Vec sigma;      // k singular values, non-increasing
  DenseMatrix V;  // cols(A) x k, orthonormal columns
};

// Top-k singular triplets via one-sided Jacobi (accurate at desk scale).
ThinSvd thin_svd(const DenseMatrix& A, std::size_t k);

struct SymEigen {
  Vec values;        // ascending
  DenseMatrix vecs;  // column j pairs with values[j]
};

// Cyclic Jacobi for symmetric matrices; used for small Gram systems.
SymEigen jacobi_eigen_sym(const DenseMatrix& S);

}  // namespace aggrex
