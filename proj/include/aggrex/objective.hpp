#pragma once

#include "aggrex/chain.hpp"
#include "aggrex/matrix.hpp"

namespace aggrex {

// U row-stochastic, V column-stochastic, both d x s; iterate X = U V^T.
struct FactorPair {
  DenseMatrix U, V;
  std::size_t d() const { return U.rows(); }
  std::size_t s() const { return U.cols(); }
};

struct LossContext {
  EmpiricalChain chain;
  double lambda = 0.0;
  Vec xi_sq;  // cached xi_i^2

  LossContext() = default;
  LossContext(EmpiricalChain c, double lam);
};

constexpr double kFeasTol = 1e-10;

bool is_feasible(const FactorPair& fp, double tol = kFeasTol);
void validate_feasible(const FactorPair& fp, double tol = kFeasTol);

DenseMatrix product(const FactorPair& fp);  // U V^T

// g(X) = 0.5 || diag(xi) (P_hat - X) ||_F^2
double loss_g(const LossContext& ctx, const DenseMatrix& X);

// grad g(X) = -diag(xi)^2 (P_hat - X)
DenseMatrix grad_g(const LossContext& ctx, const DenseMatrix& X);

// sum_j ||U_j||_2 ||V_j||_2 (factored surrogate of the atomic regularizer)
double regularizer_value(const FactorPair& fp);

double objective_F(const LossContext& ctx, const FactorPair& fp);

// grad_U F = -diag(xi)^2 (P_hat - U V^T) V + lambda U diag(||V_j||/||U_j||)
// grad_V F = -(P_hat - U V^T)^T diag(xi)^2 U + lambda V diag(||U_j||/||V_j||)
DenseMatrix grad_F_U(const LossContext& ctx, const FactorPair& fp);
DenseMatrix grad_F_V(const LossContext& ctx, const FactorPair& fp);

struct LipschitzModuli {
  double L1 = 0, L2 = 0;
};

// L1(V) = ||diag(xi)||_F^2 ||V^T V||_F + lambda/eps0
// L2(U) = ||U^T diag(xi)^2 U||_F + lambda sqrt(d) ||U||_F
LipschitzModuli lipschitz_moduli(const LossContext& ctx, const FactorPair& fp,
                                 double eps0 = 1e-14);

}  // namespace aggrex
