#pragma once

#include <cstdint>
#include <optional>
#include <utility>
#include <variant>
#include <vector>

#include "aggrex/objective.hpp"

namespace aggrex {

struct LipschitzPolicy {
  double gamma1 = 1.1, gamma2 = 1.1;  // both must exceed 1
};

struct BbPolicy {
  double delta = 0.5;  // backtracking shrink, in (0,1)
  double eta = 1e-4;   // sufficient-decrease weight
};

using StepPolicy = std::variant<LipschitzPolicy, BbPolicy>;

struct SolverConfig {
  double lambda = 1e-6;
  double eps0 = 1e-14;  // column-prune threshold
  double eps = 5e-5;    // linear-dependence threshold (rank control)
  StepPolicy policy = LipschitzPolicy{};
  std::size_t local_window = 30;
  double local_tol = 1e-3;
  std::size_t max_inner_iters = 5000;
  std::uint64_t seed = 0;
};

void validate_config(const SolverConfig& cfg);

struct PalmIterRecord {
  std::size_t iter = 0;
  std::size_t s = 0;  // after pruning
  double F = 0, c_k = 0, d_k = 0;
  int backtracks_u = 0, backtracks_v = 0;
};

struct PalmTrace {
  std::vector<PalmIterRecord> records;
  bool hit_max_iters = false;
};

// Drop U-columns with norm below eps0 (and the matching V-columns), then
// renormalize U rows. Feasible input always keeps at least one column.
FactorPair prune_columns(const FactorPair& fp, double eps0);

FactorPair palm_step_U(const LossContext& ctx, const FactorPair& fp, double c_k);
FactorPair palm_step_V(const LossContext& ctx, const FactorPair& fp, double d_k);

struct StepSizes {
  double c = 0, d = 0;
};

StepSizes step_sizes_lipschitz(const LossContext& ctx, const FactorPair& fp,
                               double gamma1, double gamma2, double eps0);

// Raw BB candidates from one accepted step: bb1 = |<S,Y>|/||Y||^2,
// bb2 = ||S||^2/|<S,Y>|. Not valid when <S,Y> = 0 (caller falls back to
// Lipschitz sizes); a non-positive denominator for the parity choice falls
// back to bb1.
struct BbCandidates {
  double bb1 = 0, bb2 = 0;
  bool valid = false;
};

BbCandidates bb_candidates(const DenseMatrix& S, const DenseMatrix& Y);

// Parity selection: even iterations take bb1, odd take bb2.
double select_bb(const BbCandidates& c, std::size_t iter);

// Inner loop: prune -> U step -> V step until the relative decrease of F
// against the mean of the previous local_window values drops below local_tol
// (checked only once the window is full), or max_inner_iters.
std::pair<FactorPair, PalmTrace> run_palm(const LossContext& ctx, FactorPair fp0,
                                          const SolverConfig& cfg);

}  // namespace aggrex
