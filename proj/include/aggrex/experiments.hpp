#pragma once

#include <optional>
#include <string>
#include <vector>

#include "aggrex/chain.hpp"
#include "aggrex/rank_control.hpp"

namespace aggrex {

struct PathEntry {
  double lambda = 0;
  std::size_t s_hat = 0;
  double F = 0;
  std::optional<double> relRE;
  DiagnosticsRecord diag;
  bool failed = false;
};

struct PathResult {
  std::vector<PathEntry> entries;             // grid order (lambda descending)
  std::optional<double> lambda_star, relRE_star;  // grid argmin of relRE
};

struct RegressionFit {
  double amplitude = 0;   // y ~ amplitude * x^exponent
  double exponent = 0;
  double r_squared = 0;
};

struct KmeansResult {
  std::vector<std::size_t> labels;
  DenseMatrix centroids;
  double wcss = 0;
};

struct PartitionResult {
  DenseMatrix embedding;
  std::vector<std::size_t> labels;
  std::size_t k = 0;
  std::string method;  // "aggregation" | "svd_baseline"
  double wcss = 0;
};

// Descending geometric grid from hi to lo with the given decade density.
std::vector<double> geometric_grid(double hi, double lo, std::size_t per_decade = 8);

// Warm-restart path: each lambda solves from the previous terminal pair, the
// first from a fresh random feasible pair at s0.
PathResult run_path(const EmpiricalChain& chain, const std::vector<double>& lambdas,
                    const SolverConfig& base, const RankAdaptConfig& rcfg,
                    std::size_t s0, const RngStream& rng,
                    const DenseMatrix* P_star = nullptr);

FactorPair random_feasible_pair(RngStream& rng, std::size_t d, std::size_t s);

// OLS on (ln x, ln y) with squared Pearson correlation.
RegressionFit fit_loglog(const Vec& xs, const Vec& ys);

// k-means++ seeding, Lloyd iterations, best WCSS over forked replicates;
// empty clusters reseeded at the farthest point.
KmeansResult kmeans_pp(const DenseMatrix& points, std::size_t k, std::size_t replicates,
                       std::size_t max_iters, const RngStream& rng);

// Embedding rows of U_hat (aggregation) or Xi^{-1} times the top-k left
// singular factors of Xi P_hat (svd_baseline), clustered by kmeans_pp.
PartitionResult partition_states(const EmpiricalChain& chain, std::size_t k,
                                 const std::string& method, std::size_t replicates,
                                 const RngStream& rng,
                                 const FactorPair* terminal = nullptr);

double adjusted_rand_index(const std::vector<std::size_t>& a,
                           const std::vector<std::size_t>& b);

}  // namespace aggrex
