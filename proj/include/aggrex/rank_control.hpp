#pragma once

#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "aggrex/diagnostics.hpp"
#include "aggrex/objective.hpp"
#include "aggrex/palm.hpp"
#include "aggrex/rng.hpp"

namespace aggrex {

struct ExactRule {
  double eps_exa = 0.3;
};

struct EarlyRule {
  std::size_t num_tests = 5000;
};

using StoppingRule = std::variant<ExactRule, EarlyRule>;

struct RankAdaptConfig {
  StoppingRule rule = ExactRule{};
  std::size_t restarts_omega = 20;
  double kappa_min = 1e-8;
  double append_decrease = 1e-5;
  std::size_t max_outer = 200;
};

struct Certificate {
  Vec mu;
  double sigma = 0;  // best atom value u^T (mu 1^T - grad g) v found
  Vec u, v;          // unit nonnegative witnesses
  bool pass = false;
  std::string rule;          // "exact" | "early"
  double lambda = 0;
  std::size_t starts = 0;    // restarts or test vectors used
};

// Averaged multiplier estimate: mu_i = mean over {j : u_ij > 0} of
// lambda u_ij ||V_j||/||U_j|| + (grad g(X) V)_ij.
Vec compute_multiplier(const LossContext& ctx, const FactorPair& fp);

struct OmegaResult {
  double sigma = 0;
  Vec u, v;
};

// max u^T W v over unit nonnegative u, v by alternating conditional
// maximization from `restarts` forked random starts plus deterministic starts
// at the dominant row/column of [W]_+. Returns a certified lower bound of the
// true maximum; the support function value is max(0, sigma).
OmegaResult omega_polar(const DenseMatrix& W, const RngStream& rng, std::size_t restarts);

Certificate certify(const LossContext& ctx, const FactorPair& fp,
                    const RankAdaptConfig& cfg, const RngStream& rng);

// Escape step: U' = [diag(1 - kappa u) U, kappa u], V' = [V, v / sum(v)],
// kappa halved from 1/||u||_inf until F drops below (1 - append_decrease) F;
// nullopt when kappa would fall below kappa_min.
std::optional<FactorPair> append_column(const LossContext& ctx, const FactorPair& fp,
                                        const Vec& u, const Vec& v,
                                        const RankAdaptConfig& cfg);

struct CompressResult {
  FactorPair fp;
  bool changed = false;
  bool warned = false;      // LP degeneracy; input returned unchanged
  double delta_norm = 0;    // realized ||Xi (X_new - X_old)||_F
  std::size_t null_count = 0;
};

// Detect near-null combinations of the weighted rank-one terms through the
// s x s Gram matrix, rescale U by diag(1 - sum_k theta_k alpha^k) and drop the
// zeroed columns; accepted only when the realized change stays within eps.
CompressResult remove_redundant(const LossContext& ctx, const FactorPair& fp, double eps);

struct PalmEvent {
  std::size_t iters = 0, s_after = 0;
  double F_after = 0;
  bool hit_max = false;
};
struct CompressEvent {
  std::size_t s_before = 0, s_after = 0;
  double delta_norm = 0, F_after = 0;
  bool warned = false;
};
struct CertificateEvent {
  std::string rule;
  double sigma = 0, lambda = 0, threshold = 0;
  bool pass = false;
};
struct AppendEvent {
  double kappa = 0, F_before = 0, F_after = 0;
  std::size_t s_after = 0;
};
using SolveEvent = std::variant<PalmEvent, CompressEvent, CertificateEvent, AppendEvent>;

struct SolveReport {
  FactorPair terminal;
  std::size_t s_hat = 0;
  double F = 0;
  std::string termination;  // certified | no-improvement | rank-cap | outer-cap
  std::vector<SolveEvent> events;
  std::vector<PalmTrace> traces;  // one per palm event, same order
  DiagnosticsRecord diagnostics;
  std::size_t total_inner_iters = 0;
};

// Algorithm driver: run PALM to local convergence, compress when redundant
// dimensions exist, otherwise certify and either stop or append an escape
// column. Enforces the s <= d^2 + 1 cap.
SolveReport adapt_rank(const LossContext& ctx, FactorPair fp0, const SolverConfig& scfg,
                       const RankAdaptConfig& rcfg, const RngStream& rng,
                       const DenseMatrix* P_star = nullptr);

}  // namespace aggrex
