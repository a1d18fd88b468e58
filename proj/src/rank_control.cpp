#include "aggrex/rank_control.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "aggrex/errors.hpp"
#include "aggrex/kernels.hpp"
#include "aggrex/simplex.hpp"
#include "aggrex/svd.hpp"

namespace aggrex {

namespace {

void validate_rank_config(const RankAdaptConfig& cfg) {
  if (const auto* ex = std::get_if<ExactRule>(&cfg.rule)) {
    if (!(ex->eps_exa > 0.0)) throw ConfigError("eps_exa must be positive");
  } else if (std::get<EarlyRule>(cfg.rule).num_tests == 0) {
    throw ConfigError("num_tests must be at least 1");
  }
  if (cfg.restarts_omega == 0) throw ConfigError("restarts_omega must be at least 1");
  if (!(cfg.kappa_min > 0.0)) throw ConfigError("kappa_min must be positive");
  if (!(cfg.append_decrease > 0.0) || !(cfg.append_decrease < 1.0))
    throw ConfigError("append_decrease must lie in (0,1)");
  if (cfg.max_outer == 0) throw ConfigError("max_outer must be at least 1");
}

DenseMatrix multiplier_gap(const LossContext& ctx, const FactorPair& fp, const Vec& mu) {
  DenseMatrix W = grad_g(ctx, product(fp));
  const std::size_t d = W.rows();
  for (std::size_t i = 0; i < d; ++i) {
    double* wi = W.row(i);
    for (std::size_t j = 0; j < d; ++j) wi[j] = mu[i] - wi[j];
  }
  return W;
}

Vec matvec(const DenseMatrix& W, const Vec& v) {
  Vec out(W.rows());
#pragma omp parallel for schedule(static) if (W.size() > 65536)
  for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(W.rows()); ++i) {
    const double* wi = W.row(static_cast<std::size_t>(i));
    double acc = 0.0;
    for (std::size_t j = 0; j < v.size(); ++j) acc += wi[j] * v[j];
    out[static_cast<std::size_t>(i)] = acc;
  }
  return out;
}

Vec matvec_t(const DenseMatrix& W, const Vec& u) {
  Vec out(W.cols(), 0.0);
  for (std::size_t i = 0; i < W.rows(); ++i) {
    const double* wi = W.row(i);
    for (std::size_t j = 0; j < W.cols(); ++j) out[j] += wi[j] * u[i];
  }
  return out;
}

double norm2(const Vec& v) {
  double acc = 0.0;
  for (double x : v) acc += x * x;
  return std::sqrt(acc);
}

double positive_part_norm(Vec& v) {
  double acc = 0.0;
  for (double& x : v) {
    x = std::max(0.0, x);
    acc += x * x;
  }
  return std::sqrt(acc);
}

std::size_t argmax_index(const Vec& v) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < v.size(); ++i)
    if (v[i] > v[best]) best = i;
  return best;
}

struct StartOutcome {
  double sigma = -std::numeric_limits<double>::infinity();
  Vec u, v;
};

// One alternating-maximization run: each half-step is the exact conditional
// optimum, so the atom value is non-decreasing until a fixed point.
StartOutcome alternate_from(const DenseMatrix& W, Vec v) {
  constexpr int kMaxAlt = 500;
  StartOutcome out;
  Vec u;
  double prev = -std::numeric_limits<double>::infinity();
  for (int it = 0; it < kMaxAlt; ++it) {
    Vec wu = matvec(W, v);
    Vec upos = wu;
    const double un = positive_part_norm(upos);
    if (un == 0.0) {
      const std::size_t i = argmax_index(wu);
      u.assign(W.rows(), 0.0);
      u[i] = 1.0;
      out.sigma = wu[i];
      break;
    }
    for (double& x : upos) x /= un;
    u = upos;
    Vec wv = matvec_t(W, u);
    Vec vpos = wv;
    const double vn = positive_part_norm(vpos);
    if (vn == 0.0) {
      const std::size_t j = argmax_index(wv);
      v.assign(W.cols(), 0.0);
      v[j] = 1.0;
      out.sigma = wv[j];
      break;
    }
    for (double& x : vpos) x /= vn;
    v = vpos;
    out.sigma = vn;  // u^T W v with v proportional to [W^T u]_+
    if (out.sigma - prev <= 1e-12 * (1.0 + std::fabs(out.sigma))) break;
    prev = out.sigma;
  }
  if (u.empty()) {
    // zero alternations succeeded; fall back to the best coordinate atom
    Vec wu = matvec(W, v);
    const std::size_t i = argmax_index(wu);
    u.assign(W.rows(), 0.0);
    u[i] = 1.0;
    out.sigma = wu[i];
  }
  out.u = std::move(u);
  out.v = std::move(v);
  // exact atom value at the returned witnesses
  Vec wu = matvec(W, out.v);
  double sig = 0.0;
  for (std::size_t i = 0; i < wu.size(); ++i) sig += out.u[i] * wu[i];
  out.sigma = sig;
  return out;
}

}  // namespace

Vec compute_multiplier(const LossContext& ctx, const FactorPair& fp) {
  validate_feasible(fp);
  const std::size_t d = fp.d(), s = fp.s();
  DenseMatrix GV = matmul_nn(grad_g(ctx, product(fp)), fp.V);
  Vec un = col_norms(fp.U), vn = col_norms(fp.V);
  Vec ratio(s, 0.0);
  for (std::size_t j = 0; j < s; ++j)
    if (un[j] > 0.0) ratio[j] = ctx.lambda * vn[j] / un[j];
  Vec mu(d, 0.0);
  for (std::size_t i = 0; i < d; ++i) {
    double acc = 0.0;
    std::size_t count = 0;
    for (std::size_t j = 0; j < s; ++j) {
      if (fp.U(i, j) > 0.0) {
        acc += fp.U(i, j) * ratio[j] + GV(i, j);
        ++count;
      }
    }
    if (count == 0)
      throw NumericError("compute_multiplier: state with empty membership row");
    mu[i] = acc / static_cast<double>(count);
  }
  return mu;
}

OmegaResult omega_polar(const DenseMatrix& W, const RngStream& rng,
                        std::size_t restarts) {
  if (!all_finite(W)) throw NumericError("omega_polar: non-finite input");
  const std::size_t m = W.rows(), n = W.cols();
  if (m == 0 || n == 0) throw NumericError("omega_polar: empty input");

  bool any_positive = false;
  for (std::size_t t = 0; t < W.size() && !any_positive; ++t)
    if (W.data()[t] > 0.0) any_positive = true;
  if (!any_positive) {
    // with no positive entry the optimum is a single coordinate pair:
    // u^T W v <= max_ij W_ij (sum u)(sum v) <= max_ij W_ij for unit u, v >= 0
    std::size_t best = 0;
    for (std::size_t t = 1; t < W.size(); ++t)
      if (W.data()[t] > W.data()[best]) best = t;
    OmegaResult out;
    out.sigma = W.data()[best];
    out.u.assign(m, 0.0);
    out.v.assign(n, 0.0);
    out.u[best / n] = 1.0;
    out.v[best % n] = 1.0;
    return out;
  }

  const std::size_t total = restarts + 2;
  std::vector<StartOutcome> results(total);

#pragma omp parallel for schedule(dynamic)
  for (std::ptrdiff_t k = 0; k < static_cast<std::ptrdiff_t>(restarts); ++k) {
    RngStream local = rng.fork(static_cast<std::uint64_t>(k));
    results[static_cast<std::size_t>(k)] =
        alternate_from(W, sample_unit_nonneg(local, n));
  }

  // deterministic starts: dominant column and dominant row of [W]_+
  {
    std::size_t jstar = 0;
    double best = -1.0;
    for (std::size_t j = 0; j < n; ++j) {
      double acc = 0.0;
      for (std::size_t i = 0; i < m; ++i) {
        const double w = std::max(0.0, W(i, j));
        acc += w * w;
      }
      if (acc > best) {
        best = acc;
        jstar = j;
      }
    }
    Vec v0(n, 0.0);
    v0[jstar] = 1.0;
    results[restarts] = alternate_from(W, v0);

    std::size_t istar = 0;
    best = -1.0;
    for (std::size_t i = 0; i < m; ++i) {
      double acc = 0.0;
      const double* wi = W.row(i);
      for (std::size_t j = 0; j < n; ++j) {
        const double w = std::max(0.0, wi[j]);
        acc += w * w;
      }
      if (acc > best) {
        best = acc;
        istar = i;
      }
    }
    Vec v1(W.row(istar), W.row(istar) + n);
    const double rn = positive_part_norm(v1);
    for (double& x : v1) x /= rn;
    results[restarts + 1] = alternate_from(W, v1);
  }

  std::size_t winner = 0;
  for (std::size_t k = 1; k < total; ++k)
    if (results[k].sigma > results[winner].sigma) winner = k;
  OmegaResult out;
  out.sigma = results[winner].sigma;
  out.u = std::move(results[winner].u);
  out.v = std::move(results[winner].v);
  return out;
}

Certificate certify(const LossContext& ctx, const FactorPair& fp,
                    const RankAdaptConfig& cfg, const RngStream& rng) {
  validate_rank_config(cfg);
  Certificate cert;
  cert.mu = compute_multiplier(ctx, fp);
  cert.lambda = ctx.lambda;
  DenseMatrix W = multiplier_gap(ctx, fp, cert.mu);
  const std::size_t d = ctx.chain.d;

  if (const auto* ex = std::get_if<ExactRule>(&cfg.rule)) {
    OmegaResult om = omega_polar(W, rng, cfg.restarts_omega);
    cert.sigma = om.sigma;
    cert.u = std::move(om.u);
    cert.v = std::move(om.v);
    cert.pass = cert.sigma <= (1.0 + ex->eps_exa) * ctx.lambda;
    cert.rule = "exact";
    cert.starts = cfg.restarts_omega;
    return cert;
  }

  const std::size_t N = std::get<EarlyRule>(cfg.rule).num_tests;
  Vec phi(N, 0.0);
#pragma omp parallel for schedule(dynamic, 16)
  for (std::ptrdiff_t k = 0; k < static_cast<std::ptrdiff_t>(N); ++k) {
    RngStream local = rng.fork(static_cast<std::uint64_t>(k));
    Vec vk = sample_unit_nonneg(local, d);
    Vec w = matvec(W, vk);
    phi[static_cast<std::size_t>(k)] = positive_part_norm(w);
  }
  std::size_t worst = 0;
  bool pass = true;
  for (std::size_t k = 0; k < N; ++k) {
    if (phi[k] > ctx.lambda) pass = false;
    if (phi[k] > phi[worst]) worst = k;
  }
  RngStream local = rng.fork(static_cast<std::uint64_t>(worst));
  cert.v = sample_unit_nonneg(local, d);
  Vec w = matvec(W, cert.v);
  Vec upos = w;
  const double un = positive_part_norm(upos);
  if (un > 0.0) {
    for (double& x : upos) x /= un;
    cert.u = std::move(upos);
    cert.sigma = un;
  } else {
    const std::size_t i = argmax_index(w);
    cert.u.assign(d, 0.0);
    cert.u[i] = 1.0;
    cert.sigma = w[i];
  }
  cert.pass = pass;
  cert.rule = "early";
  cert.starts = N;
  return cert;
}

std::optional<FactorPair> append_column(const LossContext& ctx, const FactorPair& fp,
                                        const Vec& u, const Vec& v,
                                        const RankAdaptConfig& cfg) {
  const std::size_t d = fp.d(), s = fp.s();
  if (u.size() != d || v.size() != d) throw InputError("witness dimension mismatch");
  double umax = 0.0, usq = 0.0, vsq = 0.0, vsum = 0.0;
  for (std::size_t i = 0; i < d; ++i) {
    if (u[i] < 0.0 || v[i] < 0.0 || !std::isfinite(u[i]) || !std::isfinite(v[i]))
      throw InputError("witness must be nonnegative and finite");
    umax = std::max(umax, u[i]);
    usq += u[i] * u[i];
    vsq += v[i] * v[i];
    vsum += v[i];
  }
  if (std::fabs(std::sqrt(usq) - 1.0) > 1e-8 || std::fabs(std::sqrt(vsq) - 1.0) > 1e-8)
    throw InputError("witness must have unit Euclidean norm");

  const double F_old = objective_F(ctx, fp);
  const double target = (1.0 - cfg.append_decrease) * F_old;

  for (int p = 0;; ++p) {
    const double kappa = std::pow(0.5, p) / umax;
    if (kappa < cfg.kappa_min) return std::nullopt;
    FactorPair cand;
    cand.U = DenseMatrix(d, s + 1);
    cand.V = DenseMatrix(d, s + 1);
    for (std::size_t i = 0; i < d; ++i) {
      const double shrink = std::max(0.0, 1.0 - kappa * u[i]);
      for (std::size_t j = 0; j < s; ++j) {
        cand.U(i, j) = shrink * fp.U(i, j);
        cand.V(i, j) = fp.V(i, j);
      }
      cand.U(i, s) = kappa * u[i];
      cand.V(i, s) = v[i] / vsum;
    }
    if (objective_F(ctx, cand) < target) return cand;
  }
}

namespace {

constexpr double kTightTol = 1e-9;

// Vertex walk for the compression polytope {theta : A theta <= 1} with a
// safety box |theta_k| <= 4 sqrt(s). Starting from theta = 0, move inside the
// null space of the tight rows until those rows reach full column rank. Fails
// (false) when progress requires crossing the box, which signals degeneracy.
bool vertex_walk(const DenseMatrix& A, Vec& theta) {
  const std::size_t s = A.rows(), sp = A.cols();
  const double box = 4.0 * std::sqrt(static_cast<double>(s));
  theta.assign(sp, 0.0);
  Vec y(s, 0.0);

  for (std::size_t round = 0; round <= s + 1; ++round) {
    std::vector<std::size_t> tight;
    for (std::size_t j = 0; j < s; ++j)
      if (y[j] >= 1.0 - kTightTol) tight.push_back(j);

    DenseMatrix M(sp, sp);
    for (std::size_t a = 0; a < sp; ++a)
      for (std::size_t b = 0; b < sp; ++b) {
        double acc = 0.0;
        for (std::size_t j : tight) acc += A(j, a) * A(j, b);
        M(a, b) = acc;
      }
    SymEigen eig = jacobi_eigen_sym(M);
    const double scale = std::max(1.0, eig.values.back());
    if (eig.values.front() > 1e-10 * scale) return true;  // tight rows span

    Vec w(sp);
    for (std::size_t a = 0; a < sp; ++a) w[a] = eig.vecs(a, 0);

    bool moved = false;
    for (int attempt = 0; attempt < 2 && !moved; ++attempt) {
      if (attempt == 1)
        for (double& x : w) x = -x;
      Vec aw(s, 0.0);
      for (std::size_t j = 0; j < s; ++j) {
        double acc = 0.0;
        for (std::size_t a = 0; a < sp; ++a) acc += A(j, a) * w[a];
        aw[j] = acc;
      }
      double t_row = std::numeric_limits<double>::infinity();
      for (std::size_t j = 0; j < s; ++j) {
        if (aw[j] > 1e-10 && y[j] < 1.0 - kTightTol) {
          const double t = (1.0 - y[j]) / aw[j];
          t_row = std::min(t_row, t);
        }
      }
      if (!std::isfinite(t_row)) continue;
      double t_box = std::numeric_limits<double>::infinity();
      for (std::size_t a = 0; a < sp; ++a) {
        if (w[a] > 1e-14) t_box = std::min(t_box, (box - theta[a]) / w[a]);
        if (w[a] < -1e-14) t_box = std::min(t_box, (-box - theta[a]) / w[a]);
      }
      if (t_box < t_row) continue;  // would leave the box first
      for (std::size_t a = 0; a < sp; ++a) theta[a] += t_row * w[a];
      for (std::size_t j = 0; j < s; ++j) {
        double acc = 0.0;
        for (std::size_t a = 0; a < sp; ++a) acc += A(j, a) * theta[a];
        y[j] = acc;
      }
      moved = true;
    }
    if (!moved) return false;
  }
  return false;
}

}  // namespace

CompressResult remove_redundant(const LossContext& ctx, const FactorPair& fp,
                                double eps) {
  CompressResult res;
  res.fp = fp;
  const std::size_t d = fp.d(), s = fp.s();
  if (s <= 1) return res;
  if (!(eps > 0.0)) throw ConfigError("compression threshold must be positive");

  DenseMatrix Guu = matmul_tn(fp.U, scale_rows(fp.U, ctx.xi_sq));
  DenseMatrix Gvv = matmul_tn(fp.V, fp.V);
  DenseMatrix G(s, s);
  for (std::size_t t = 0; t < G.size(); ++t)
    G.data()[t] = Guu.data()[t] * Gvv.data()[t];

  SymEigen eig = jacobi_eigen_sym(G);
  std::size_t null_count = 0;
  while (null_count < s &&
         std::sqrt(std::max(0.0, eig.values[null_count])) <= eps)
    ++null_count;
  if (null_count == 0) return res;
  if (null_count >= s) null_count = s - 1;
  res.null_count = null_count;

  DenseMatrix A(s, null_count);
  for (std::size_t j = 0; j < s; ++j)
    for (std::size_t k = 0; k < null_count; ++k) A(j, k) = eig.vecs(j, k);

  if (null_count == 1) {
    // orient so a positive entry exists, then the closed form is exact
    double mx = A(0, 0);
    for (std::size_t j = 1; j < s; ++j) mx = std::max(mx, A(j, 0));
    double mn = A(0, 0);
    for (std::size_t j = 1; j < s; ++j) mn = std::min(mn, A(j, 0));
    if (-mn > mx) {
      for (std::size_t j = 0; j < s; ++j) A(j, 0) = -A(j, 0);
      mx = -mn;
    }
    if (!(mx > 0.0)) {
      res.warned = true;
      return res;
    }
  }

  Vec theta;
  if (null_count == 1) {
    double mx = A(0, 0);
    for (std::size_t j = 1; j < s; ++j) mx = std::max(mx, A(j, 0));
    theta.assign(1, 1.0 / mx);
  } else if (!vertex_walk(A, theta)) {
    res.warned = true;
    return res;
  }

  Vec beta(s);
  std::vector<std::size_t> keep;
  for (std::size_t j = 0; j < s; ++j) {
    double acc = 0.0;
    for (std::size_t k = 0; k < null_count; ++k) acc += A(j, k) * theta[k];
    beta[j] = 1.0 - acc;
    if (beta[j] < -kTightTol) {
      res.warned = true;
      return res;
    }
    beta[j] = std::max(0.0, beta[j]);
    if (beta[j] > kTightTol) keep.push_back(j);
  }
  if (keep.empty() || keep.size() >= s) {
    res.warned = true;
    return res;
  }

  FactorPair out;
  out.U = DenseMatrix(d, keep.size());
  out.V = DenseMatrix(d, keep.size());
  for (std::size_t i = 0; i < d; ++i) {
    double rsum = 0.0;
    for (std::size_t t = 0; t < keep.size(); ++t) {
      out.U(i, t) = beta[keep[t]] * fp.U(i, keep[t]);
      out.V(i, t) = fp.V(i, keep[t]);
      rsum += out.U(i, t);
    }
    if (rsum > 0.0) {
      for (std::size_t t = 0; t < keep.size(); ++t) out.U(i, t) /= rsum;
    } else {
      for (std::size_t t = 0; t < keep.size(); ++t)
        out.U(i, t) = 1.0 / static_cast<double>(keep.size());
    }
  }

  const double F_old = objective_F(ctx, fp);
  const double F_new = objective_F(ctx, out);
  const double bound = eps * (1.0 + weighted_frobenius(ctx.chain.P, ctx.chain.xi));
  if (std::fabs(F_new - F_old) > bound) {
    res.warned = true;
    return res;
  }
  DenseMatrix delta = subtract(product(out), product(fp));
  res.delta_norm = weighted_frobenius(delta, ctx.chain.xi);
  res.fp = std::move(out);
  res.changed = true;
  return res;
}

SolveReport adapt_rank(const LossContext& ctx, FactorPair fp0, const SolverConfig& scfg,
                       const RankAdaptConfig& rcfg, const RngStream& rng,
                       const DenseMatrix* P_star) {
  validate_config(scfg);
  validate_rank_config(rcfg);
  validate_feasible(fp0);

  SolveReport rep;
  FactorPair fp = std::move(fp0);
  const std::size_t d = ctx.chain.d;
  const bool exact = std::holds_alternative<ExactRule>(rcfg.rule);
  const double threshold =
      exact ? (1.0 + std::get<ExactRule>(rcfg.rule).eps_exa) * ctx.lambda : ctx.lambda;

  try {
    for (std::size_t t = 1; t <= rcfg.max_outer; ++t) {
      auto [next, trace] = run_palm(ctx, fp, scfg);
      fp = std::move(next);
      rep.total_inner_iters += trace.records.size();
      rep.events.push_back(PalmEvent{trace.records.size(), fp.s(),
                                     trace.records.back().F, trace.hit_max_iters});
      rep.traces.push_back(std::move(trace));

      const std::size_t s_before = fp.s();
      CompressResult cr = remove_redundant(ctx, fp, scfg.eps);
      if (cr.changed || cr.warned)
        rep.events.push_back(CompressEvent{s_before, cr.fp.s(), cr.delta_norm,
                                           objective_F(ctx, cr.fp), cr.warned});
      if (cr.changed) {
        fp = std::move(cr.fp);
        continue;
      }

      Certificate cert = certify(ctx, fp, rcfg, rng.fork(t));
      rep.events.push_back(
          CertificateEvent{cert.rule, cert.sigma, ctx.lambda, threshold, cert.pass});
      if (cert.pass) {
        rep.termination = "certified";
        break;
      }
      if (fp.s() >= d * d + 1) {
        rep.termination = "rank-cap";
        break;
      }
      const double F_before = objective_F(ctx, fp);
      std::optional<FactorPair> appended =
          append_column(ctx, fp, cert.u, cert.v, rcfg);
      if (!appended) {
        rep.termination = "no-improvement";
        break;
      }
      double umax = 0.0;
      for (double x : cert.u) umax = std::max(umax, x);
      double col_max = 0.0;
      for (std::size_t i = 0; i < d; ++i)
        col_max = std::max(col_max, appended->U(i, fp.s()));
      fp = std::move(*appended);
      rep.events.push_back(
          AppendEvent{col_max / umax, F_before, objective_F(ctx, fp), fp.s()});
    }
  } catch (const NumericError&) {
    rep.termination = "numeric-failure";
  }
  if (rep.termination.empty()) rep.termination = "outer-cap";

  rep.terminal = fp;
  rep.s_hat = fp.s();
  rep.F = objective_F(ctx, fp);
  if (rep.termination != "numeric-failure") {
    try {
      rep.diagnostics =
          compute_diagnostics(ctx, fp, rng.fork(0), rcfg.restarts_omega, P_star);
    } catch (const NumericError&) {
      rep.diagnostics = DiagnosticsRecord{};
    }
  }
  return rep;
}

}  // namespace aggrex
