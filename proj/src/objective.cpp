#include "aggrex/objective.hpp"

#include <cmath>

#include "aggrex/errors.hpp"
#include "aggrex/kernels.hpp"

namespace aggrex {

LossContext::LossContext(EmpiricalChain c, double lam) : chain(std::move(c)), lambda(lam) {
  if (!(lambda > 0.0) || !std::isfinite(lambda))
    throw NumericError("LossContext: lambda must be finite and positive");
  if (chain.P.rows() != chain.d || chain.P.cols() != chain.d ||
      chain.xi.size() != chain.d)
    throw NumericError("LossContext: chain dimensions inconsistent");
  xi_sq.resize(chain.d);
  for (std::size_t i = 0; i < chain.d; ++i) xi_sq[i] = chain.xi[i] * chain.xi[i];
}

bool is_feasible(const FactorPair& fp, double tol) {
  const std::size_t d = fp.U.rows(), s = fp.U.cols();
  if (d == 0 || s == 0 || fp.V.rows() != d || fp.V.cols() != s) return false;
  for (std::size_t i = 0; i < d; ++i) {
    double sum = 0.0;
    for (std::size_t j = 0; j < s; ++j) {
      const double u = fp.U(i, j);
      if (!(u >= -tol) || !std::isfinite(u)) return false;
      sum += u;
    }
    if (std::fabs(sum - 1.0) > tol) return false;
  }
  Vec csum = col_sums(fp.V);
  for (std::size_t j = 0; j < s; ++j)
    if (std::fabs(csum[j] - 1.0) > tol) return false;
  for (std::size_t i = 0; i < fp.V.size(); ++i) {
    const double v = fp.V.data()[i];
    if (!(v >= -tol) || !std::isfinite(v)) return false;
  }
  return true;
}

void validate_feasible(const FactorPair& fp, double tol) {
  if (!is_feasible(fp, tol))
    throw NumericError("factor pair infeasible (stochasticity violated)");
}

DenseMatrix product(const FactorPair& fp) { return matmul_nt(fp.U, fp.V); }

double loss_g(const LossContext& ctx, const DenseMatrix& X) {
  if (X.rows() != ctx.chain.d || X.cols() != ctx.chain.d)
    throw NumericError("loss_g: dimension mismatch");
  const std::size_t d = ctx.chain.d;
  const double* p = ctx.chain.P.data();
  const double* x = X.data();
  const double sq = blocked_sum(d * d, [&](std::size_t t) {
    const double r = p[t] - x[t];
    return ctx.xi_sq[t / d] * r * r;
  });
  return 0.5 * sq;
}

DenseMatrix grad_g(const LossContext& ctx, const DenseMatrix& X) {
  if (X.rows() != ctx.chain.d || X.cols() != ctx.chain.d)
    throw NumericError("grad_g: dimension mismatch");
  const std::size_t d = ctx.chain.d;
  DenseMatrix G(d, d);
#pragma omp parallel for schedule(static) if (d * d > 16384)
  for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(d); ++i) {
    const double wi = ctx.xi_sq[static_cast<std::size_t>(i)];
    const double* pi = ctx.chain.P.row(static_cast<std::size_t>(i));
    const double* xi = X.row(static_cast<std::size_t>(i));
    double* gi = G.row(static_cast<std::size_t>(i));
    for (std::size_t j = 0; j < d; ++j) gi[j] = -wi * (pi[j] - xi[j]);
  }
  return G;
}

double regularizer_value(const FactorPair& fp) {
  Vec un = col_norms(fp.U), vn = col_norms(fp.V);
  double total = 0.0;
  for (std::size_t j = 0; j < un.size(); ++j) total += un[j] * vn[j];
  return total;
}

double objective_F(const LossContext& ctx, const FactorPair& fp) {
  validate_feasible(fp);
  return loss_g(ctx, product(fp)) + ctx.lambda * regularizer_value(fp);
}

namespace {

// residual R = P_hat - U V^T
DenseMatrix residual(const LossContext& ctx, const FactorPair& fp) {
  return subtract(ctx.chain.P, product(fp));
}

Vec norm_ratios(const Vec& num, const Vec& den, const char* side) {
  Vec out(num.size());
  for (std::size_t j = 0; j < num.size(); ++j) {
    if (den[j] == 0.0)
      throw NumericError(std::string("zero column makes the gradient undefined (") +
                         side + "); prune first");
    out[j] = num[j] / den[j];
  }
  return out;
}

}  // namespace

DenseMatrix grad_F_U(const LossContext& ctx, const FactorPair& fp) {
  Vec un = col_norms(fp.U), vn = col_norms(fp.V);
  Vec ratio = norm_ratios(vn, un, "U");
  for (double& r : ratio) r *= ctx.lambda;
  DenseMatrix R = residual(ctx, fp);
  DenseMatrix G = matmul_nn(scale_rows(R, ctx.xi_sq), fp.V);
  DenseMatrix reg = scale_cols(fp.U, ratio);
#pragma omp parallel for schedule(static) if (G.size() > 16384)
  for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(G.size()); ++i)
    G.data()[i] = -G.data()[i] + reg.data()[i];
  return G;
}

DenseMatrix grad_F_V(const LossContext& ctx, const FactorPair& fp) {
  Vec un = col_norms(fp.U), vn = col_norms(fp.V);
  Vec ratio = norm_ratios(un, vn, "V");
  for (double& r : ratio) r *= ctx.lambda;
  DenseMatrix R = residual(ctx, fp);
  DenseMatrix G = matmul_tn(R, scale_rows(fp.U, ctx.xi_sq));
  DenseMatrix reg = scale_cols(fp.V, ratio);
#pragma omp parallel for schedule(static) if (G.size() > 16384)
  for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(G.size()); ++i)
    G.data()[i] = -G.data()[i] + reg.data()[i];
  return G;
}

LipschitzModuli lipschitz_moduli(const LossContext& ctx, const FactorPair& fp,
                                 double eps0) {
  if (!(eps0 > 0.0)) throw NumericError("lipschitz_moduli: eps0 must be positive");
  const std::size_t d = fp.d();
  double xi_frob_sq = 0.0;
  for (double w : ctx.xi_sq) xi_frob_sq += w;

  DenseMatrix VtV = matmul_tn(fp.V, fp.V);
  DenseMatrix UtXU = matmul_tn(fp.U, scale_rows(fp.U, ctx.xi_sq));

  LipschitzModuli m;
  m.L1 = xi_frob_sq * frob_norm(VtV) + ctx.lambda / eps0;
  m.L2 = frob_norm(UtXU) +
         ctx.lambda * std::sqrt(static_cast<double>(d)) * frob_norm(fp.U);
  return m;
}

}  // namespace aggrex
