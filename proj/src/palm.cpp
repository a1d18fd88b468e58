#include "aggrex/palm.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <numeric>

#include "aggrex/errors.hpp"
#include "aggrex/kernels.hpp"
#include "aggrex/simplex.hpp"

namespace aggrex {

void validate_config(const SolverConfig& cfg) {
  if (!(cfg.lambda > 0.0) || !std::isfinite(cfg.lambda))
    throw ConfigError("lambda must be finite and positive");
  if (!(cfg.eps0 > 0.0)) throw ConfigError("eps0 must be positive");
  if (!(cfg.eps > 0.0)) throw ConfigError("eps must be positive");
  if (cfg.local_window == 0) throw ConfigError("local_window must be at least 1");
  if (!(cfg.local_tol > 0.0)) throw ConfigError("local_tol must be positive");
  if (cfg.max_inner_iters == 0)
    throw ConfigError("max_inner_iters must be at least 1");
  if (const auto* lp = std::get_if<LipschitzPolicy>(&cfg.policy)) {
    if (!(lp->gamma1 > 1.0) || !(lp->gamma2 > 1.0))
      throw ConfigError("gamma1 and gamma2 must exceed 1");
  } else {
    const auto& bp = std::get<BbPolicy>(cfg.policy);
    if (!(bp.delta > 0.0) || !(bp.delta < 1.0))
      throw ConfigError("delta must lie in (0,1)");
    if (!(bp.eta > 0.0)) throw ConfigError("eta must be positive");
  }
}

FactorPair prune_columns(const FactorPair& fp, double eps0) {
  const std::size_t d = fp.d(), s = fp.s();
  Vec un = col_norms(fp.U);
  std::vector<std::size_t> keep;
  keep.reserve(s);
  for (std::size_t j = 0; j < s; ++j)
    if (!(un[j] < eps0)) keep.push_back(j);
  if (keep.empty()) {
    std::size_t best = 0;
    for (std::size_t j = 1; j < s; ++j)
      if (un[j] > un[best]) best = j;
    keep.push_back(best);
  }
  if (keep.size() == s) return fp;

  const std::size_t sp = keep.size();
  FactorPair out;
  out.U = DenseMatrix(d, sp);
  out.V = DenseMatrix(d, sp);
  for (std::size_t i = 0; i < d; ++i) {
    for (std::size_t t = 0; t < sp; ++t) {
      out.U(i, t) = fp.U(i, keep[t]);
      out.V(i, t) = fp.V(i, keep[t]);
    }
  }
  for (std::size_t i = 0; i < d; ++i) {
    double* r = out.U.row(i);
    double sum = std::accumulate(r, r + sp, 0.0);
    if (sum > 0.0) {
      for (std::size_t t = 0; t < sp; ++t) r[t] /= sum;
    } else {
      for (std::size_t t = 0; t < sp; ++t) r[t] = 1.0 / static_cast<double>(sp);
    }
  }
  return out;
}

FactorPair palm_step_U(const LossContext& ctx, const FactorPair& fp, double c_k) {
  if (!(c_k > 0.0) || !std::isfinite(c_k))
    throw NumericError("palm_step_U: step size must be finite and positive");
  FactorPair out = fp;
  out.U = add_scaled(fp.U, -c_k, grad_F_U(ctx, fp));
  project_rows_inplace(out.U);
  return out;
}

FactorPair palm_step_V(const LossContext& ctx, const FactorPair& fp, double d_k) {
  if (!(d_k > 0.0) || !std::isfinite(d_k))
    throw NumericError("palm_step_V: step size must be finite and positive");
  FactorPair out = fp;
  out.V = add_scaled(fp.V, -d_k, grad_F_V(ctx, fp));
  project_cols_inplace(out.V);
  return out;
}

StepSizes step_sizes_lipschitz(const LossContext& ctx, const FactorPair& fp,
                               double gamma1, double gamma2, double eps0) {
  LipschitzModuli m = lipschitz_moduli(ctx, fp, eps0);
  StepSizes s;
  s.c = 1.0 / (gamma1 * m.L1);
  s.d = 1.0 / (gamma2 * m.L2);
  if (!(s.c > 0.0) || !(s.d > 0.0) || !std::isfinite(s.c) || !std::isfinite(s.d))
    throw NumericError("degenerate Lipschitz step sizes");
  return s;
}

BbCandidates bb_candidates(const DenseMatrix& S, const DenseMatrix& Y) {
  BbCandidates c;
  const double sy = dot(S, Y);
  const double yy = frob_sq(Y);
  const double ss = frob_sq(S);
  if (sy == 0.0 || !std::isfinite(sy) || ss == 0.0) return c;
  const double asy = std::fabs(sy);
  c.bb1 = yy > 0.0 ? asy / yy : 0.0;
  c.bb2 = ss / asy;
  c.valid = c.bb1 > 0.0 && std::isfinite(c.bb1);
  return c;
}

double select_bb(const BbCandidates& c, std::size_t iter) {
  if (!c.valid) return 0.0;
  double pick = (iter % 2 == 0) ? c.bb1 : c.bb2;
  if (!(pick > 0.0) || !std::isfinite(pick)) pick = c.bb1;
  if (!(pick > 0.0) || !std::isfinite(pick)) return 0.0;
  return pick;
}

namespace {

constexpr std::size_t kBbRefWindow = 5;
constexpr int kMaxBacktracks = 60;

double mean_of(const std::deque<double>& q) {
  return std::accumulate(q.begin(), q.end(), 0.0) / static_cast<double>(q.size());
}

void push_ref(std::deque<double>& q, double v) {
  q.push_back(v);
  if (q.size() > kBbRefWindow) q.pop_front();
}

struct BbState {
  BbCandidates cand;
  bool have = false;
};

// Shared shape of the two half-steps: gradient at the base point, trial step
// with the nonmonotone sufficient-decrease test, Lipschitz rescue after too
// many halvings, then fresh BB candidates from the accepted move.
template <class Grad, class Project, DenseMatrix FactorPair::* Member>
FactorPair bb_half_step(const LossContext& ctx, const FactorPair& fp,
                        const BbPolicy& bp, double lip_step, std::size_t iter,
                        std::deque<double>& refs, BbState& state, double& step_out,
                        int& backtracks_out, Grad grad, Project project) {
  DenseMatrix G = grad(ctx, fp);
  const double gnorm2 = frob_sq(G);
  push_ref(refs, objective_F(ctx, fp));
  const double ref = mean_of(refs);

  double step = state.have ? select_bb(state.cand, iter) : 0.0;
  if (!(step > 0.0)) step = lip_step;

  FactorPair trial;
  int backtracks = 0;
  for (;;) {
    trial = fp;
    trial.*Member = add_scaled(fp.*Member, -step, G);
    project(trial.*Member);
    if (objective_F(ctx, trial) <= ref - bp.eta * step * gnorm2) break;
    ++backtracks;
    if (backtracks > kMaxBacktracks) {
      step = lip_step;
      trial = fp;
      trial.*Member = add_scaled(fp.*Member, -step, G);
      project(trial.*Member);
      break;
    }
    step *= bp.delta;
  }

  DenseMatrix S = subtract(trial.*Member, fp.*Member);
  DenseMatrix Y = subtract(grad(ctx, trial), G);
  state.cand = bb_candidates(S, Y);
  state.have = state.cand.valid;

  step_out = step;
  backtracks_out = backtracks;
  return trial;
}

}  // namespace

std::pair<FactorPair, PalmTrace> run_palm(const LossContext& ctx, FactorPair fp0,
                                          const SolverConfig& cfg) {
  validate_config(cfg);
  validate_feasible(fp0);

  const auto* lip_policy = std::get_if<LipschitzPolicy>(&cfg.policy);
  const double gamma1 = lip_policy ? lip_policy->gamma1 : LipschitzPolicy{}.gamma1;
  const double gamma2 = lip_policy ? lip_policy->gamma2 : LipschitzPolicy{}.gamma2;

  FactorPair fp = prune_columns(fp0, cfg.eps0);
  PalmTrace trace;
  std::deque<double> window;  // completed-iteration values; the start point stays out
  std::deque<double> urefs, vrefs;
  BbState bbu, bbv;
  std::size_t s_prev = fp.s();

  for (std::size_t k = 1; k <= cfg.max_inner_iters; ++k) {
    fp = prune_columns(fp, cfg.eps0);
    if (fp.s() != s_prev) {
      bbu.have = false;
      bbv.have = false;
      s_prev = fp.s();
    }

    double c_k = 0.0, d_k = 0.0;
    int bt_u = 0, bt_v = 0;
    FactorPair after_u;

    if (lip_policy) {
      c_k = step_sizes_lipschitz(ctx, fp, gamma1, gamma2, cfg.eps0).c;
      after_u = palm_step_U(ctx, fp, c_k);
      d_k = step_sizes_lipschitz(ctx, after_u, gamma1, gamma2, cfg.eps0).d;
      fp = palm_step_V(ctx, after_u, d_k);
    } else {
      const auto& bp = std::get<BbPolicy>(cfg.policy);
      const double lip_c =
          step_sizes_lipschitz(ctx, fp, gamma1, gamma2, cfg.eps0).c;
      after_u = bb_half_step<decltype(&grad_F_U), void (*)(DenseMatrix&),
                             &FactorPair::U>(
          ctx, fp, bp, lip_c, k, urefs, bbu, c_k, bt_u, &grad_F_U,
          &project_rows_inplace);
      const double lip_d =
          step_sizes_lipschitz(ctx, after_u, gamma1, gamma2, cfg.eps0).d;
      fp = bb_half_step<decltype(&grad_F_V), void (*)(DenseMatrix&),
                        &FactorPair::V>(
          ctx, after_u, bp, lip_d, k, vrefs, bbv, d_k, bt_v, &grad_F_V,
          &project_cols_inplace);
    }

    const double F_k = objective_F(ctx, fp);
    trace.records.push_back({k, fp.s(), F_k, c_k, d_k, bt_u, bt_v});

    if (window.size() == cfg.local_window) {
      const double fbar = mean_of(window);
      if ((fbar - F_k) / std::max(F_k, 1e-300) < cfg.local_tol) return {fp, trace};
    }
    window.push_back(F_k);
    if (window.size() > cfg.local_window) window.pop_front();
  }
  trace.hit_max_iters = true;
  return {fp, trace};
}

}  // namespace aggrex
