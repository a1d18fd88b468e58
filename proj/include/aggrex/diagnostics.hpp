#pragma once

#include <optional>

#include "aggrex/objective.hpp"
#include "aggrex/rng.hpp"

namespace aggrex {

struct DiagnosticsRecord {
  double relLE1 = 0, relLE2 = 0, GE = 0, relDG = 0;
  std::optional<double> relRE, relSE;
  std::optional<double> sigma1, sigma_r, sigma_r1;  // of diag(xi) P_hat
  bool zero_weight_states = false;  // xi has zero entries; 1/xi terms skip them
  bool denom_zero = false;          // a KKT denominator vanished (+inf residual)
};

// The two l1-normalized KKT residuals; mu is the averaged multiplier estimate.
std::pair<double, double> kkt_residuals(const LossContext& ctx, const FactorPair& fp,
                                        const Vec& mu, bool* denom_zero = nullptr);

// GE = OmegaPolar(W) - 1 with W = (mu 1^T - grad g(X)) / lambda.
double global_error(const LossContext& ctx, const FactorPair& fp, const Vec& mu,
                    const RngStream& rng, std::size_t restarts = 20);

// g*(M) = 0.5||Xi^{-1}M + Xi P||_F^2 - 0.5||Xi P||_F^2 - (1/2d)||Xi^{-1}M 1||_2^2,
// rows with xi_i = 0 excluded from the Xi^{-1} terms (flagged).
double dual_value(const LossContext& ctx, const DenseMatrix& M,
                  bool* zero_weight = nullptr);

// (primal + g*(M)) / primal with M = -(lambda/OmegaPolar(W)) W.
double relative_duality_gap(const LossContext& ctx, const FactorPair& fp, const Vec& mu,
                            const RngStream& rng, std::size_t restarts = 20);

// relRE = ||Xi(X - P*)||_F^2 / ||Xi P*||_F^2; relSE is the same ratio with the
// estimated transition matrix in place of X.
std::pair<double, double> recovery_errors(const LossContext& ctx, const DenseMatrix& X,
                                          const DenseMatrix& P_star);

DiagnosticsRecord compute_diagnostics(const LossContext& ctx, const FactorPair& fp,
                                      const RngStream& rng, std::size_t restarts = 20,
                                      const DenseMatrix* P_star = nullptr);

}  // namespace aggrex
