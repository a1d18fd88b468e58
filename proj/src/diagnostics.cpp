#include "aggrex/diagnostics.hpp"

#include <cmath>
#include <limits>

#include "aggrex/errors.hpp"
#include "aggrex/kernels.hpp"
#include "aggrex/rank_control.hpp"

namespace aggrex {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// mu 1^T - grad g(X), the matrix whose atom values drive every global metric.
DenseMatrix multiplier_gap(const LossContext& ctx, const FactorPair& fp, const Vec& mu) {
  DenseMatrix W = grad_g(ctx, product(fp));
  const std::size_t d = W.rows();
  for (std::size_t i = 0; i < d; ++i) {
    double* wi = W.row(i);
    for (std::size_t j = 0; j < d; ++j) wi[j] = mu[i] - wi[j];
  }
  return W;
}

}  // namespace

std::pair<double, double> kkt_residuals(const LossContext& ctx, const FactorPair& fp,
                                        const Vec& mu, bool* denom_zero) {
  validate_feasible(fp);
  if (mu.size() != fp.d()) throw NumericError("kkt_residuals: multiplier length");
  const std::size_t d = fp.d(), s = fp.s();
  Vec un = col_norms(fp.U), vn = col_norms(fp.V);
  bool degenerate = false;
  for (std::size_t j = 0; j < s; ++j)
    if (un[j] == 0.0 || vn[j] == 0.0) degenerate = true;
  if (denom_zero) *denom_zero = degenerate;
  if (degenerate) return {kInf, kInf};

  DenseMatrix G = grad_g(ctx, product(fp));
  DenseMatrix GV = matmul_nn(G, fp.V);
  DenseMatrix GtU = matmul_tn(G, fp.U);
  Vec muU(s, 0.0);
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t j = 0; j < s; ++j) muU[j] += mu[i] * fp.U(i, j);

  Vec r1(s), r2(s);
  for (std::size_t j = 0; j < s; ++j) {
    r1[j] = ctx.lambda * vn[j] / un[j];
    r2[j] = ctx.lambda * un[j] / vn[j];
  }

  const double num1 = blocked_sum(d * s, [&](std::size_t t) {
    const std::size_t i = t / s, j = t % s;
    const double lhs = std::max(0.0, mu[i] - GV(i, j));
    return std::fabs(lhs - r1[j] * fp.U(i, j));
  });
  const double den1 = blocked_sum(d * s, [&](std::size_t t) {
    return r1[t % s] * fp.U(t / s, t % s);
  });
  const double num2 = blocked_sum(d * s, [&](std::size_t t) {
    const std::size_t i = t / s, j = t % s;
    const double lhs = std::max(0.0, muU[j] - GtU(i, j));
    return std::fabs(lhs - r2[j] * fp.V(i, j));
  });
  const double den2 = blocked_sum(d * s, [&](std::size_t t) {
    return r2[t % s] * fp.V(t / s, t % s);
  });

  if (den1 == 0.0 || den2 == 0.0) {
    if (denom_zero) *denom_zero = true;
    return {den1 == 0.0 ? kInf : num1 / den1, den2 == 0.0 ? kInf : num2 / den2};
  }
  return {num1 / den1, num2 / den2};
}

double global_error(const LossContext& ctx, const FactorPair& fp, const Vec& mu,
                    const RngStream& rng, std::size_t restarts) {
  DenseMatrix W = multiplier_gap(ctx, fp, mu);
  const double inv = 1.0 / ctx.lambda;
  for (std::size_t t = 0; t < W.size(); ++t) W.data()[t] *= inv;
  OmegaResult om = omega_polar(W, rng, restarts);
  return std::max(0.0, om.sigma) - 1.0;
}

double dual_value(const LossContext& ctx, const DenseMatrix& M, bool* zero_weight) {
  const std::size_t d = ctx.chain.d;
  if (M.rows() != d || M.cols() != d) throw NumericError("dual_value: dimensions");
  if (!all_finite(M)) throw NumericError("dual_value: non-finite dual candidate");
  bool degenerate = false;
  for (double x : ctx.chain.xi)
    if (x == 0.0) degenerate = true;
  if (zero_weight) *zero_weight = degenerate;

  const double* p = ctx.chain.P.data();
  const double* m = M.data();
  const Vec& xi = ctx.chain.xi;

  const double shifted = blocked_sum(d * d, [&](std::size_t t) {
    const std::size_t i = t / d;
    if (xi[i] == 0.0) return 0.0;
    const double v = m[t] / xi[i] + xi[i] * p[t];
    return v * v;
  });
  const double base = blocked_sum(d * d, [&](std::size_t t) {
    const double v = xi[t / d] * p[t];
    return v * v;
  });
  double rowterm = 0.0;
  for (std::size_t i = 0; i < d; ++i) {
    if (xi[i] == 0.0) continue;
    double rsum = 0.0;
    const double* mi = M.row(i);
    for (std::size_t j = 0; j < d; ++j) rsum += mi[j];
    rsum /= xi[i];
    rowterm += rsum * rsum;
  }
  return 0.5 * shifted - 0.5 * base - rowterm / (2.0 * static_cast<double>(d));
}

double relative_duality_gap(const LossContext& ctx, const FactorPair& fp, const Vec& mu,
                            const RngStream& rng, std::size_t restarts) {
  const double primal = objective_F(ctx, fp);
  DenseMatrix W = multiplier_gap(ctx, fp, mu);
  const double inv = 1.0 / ctx.lambda;
  for (std::size_t t = 0; t < W.size(); ++t) W.data()[t] *= inv;
  OmegaResult om = omega_polar(W, rng, restarts);
  const double omega = std::max(om.sigma, 1e-12);
  const double scale = -ctx.lambda / omega;
  for (std::size_t t = 0; t < W.size(); ++t) W.data()[t] *= scale;
  const double dual = dual_value(ctx, W);
  return (primal + dual) / primal;
}

std::pair<double, double> recovery_errors(const LossContext& ctx, const DenseMatrix& X,
                                          const DenseMatrix& P_star) {
  const std::size_t d = ctx.chain.d;
  if (X.rows() != d || X.cols() != d || P_star.rows() != d || P_star.cols() != d)
    throw NumericError("recovery_errors: dimension mismatch");
  const double denom = blocked_sum(d * d, [&](std::size_t t) {
    const double v = ctx.chain.xi[t / d] * P_star.data()[t];
    return v * v;
  });
  const double rec = blocked_sum(d * d, [&](std::size_t t) {
    const double v = ctx.chain.xi[t / d] * (X.data()[t] - P_star.data()[t]);
    return v * v;
  });
  const double samp = blocked_sum(d * d, [&](std::size_t t) {
    const double v = ctx.chain.xi[t / d] * (ctx.chain.P.data()[t] - P_star.data()[t]);
    return v * v;
  });
  if (denom == 0.0) return {kInf, kInf};
  return {rec / denom, samp / denom};
}

DiagnosticsRecord compute_diagnostics(const LossContext& ctx, const FactorPair& fp,
                                      const RngStream& rng, std::size_t restarts,
                                      const DenseMatrix* P_star) {
  DiagnosticsRecord rec;
  Vec mu = compute_multiplier(ctx, fp);
  auto [le1, le2] = kkt_residuals(ctx, fp, mu, &rec.denom_zero);
  rec.relLE1 = le1;
  rec.relLE2 = le2;

  DenseMatrix W = multiplier_gap(ctx, fp, mu);
  const double inv = 1.0 / ctx.lambda;
  for (std::size_t t = 0; t < W.size(); ++t) W.data()[t] *= inv;
  OmegaResult om = omega_polar(W, rng, restarts);
  rec.GE = std::max(0.0, om.sigma) - 1.0;

  const double primal = objective_F(ctx, fp);
  const double omega = std::max(om.sigma, 1e-12);
  const double scale = -ctx.lambda / omega;
  for (std::size_t t = 0; t < W.size(); ++t) W.data()[t] *= scale;
  const double dual = dual_value(ctx, W, &rec.zero_weight_states);
  rec.relDG = (primal + dual) / primal;

  if (P_star) {
    auto [rre, rse] = recovery_errors(ctx, product(fp), *P_star);
    rec.relRE = rre;
    rec.relSE = rse;
  }
  return rec;
}

}  // namespace aggrex
