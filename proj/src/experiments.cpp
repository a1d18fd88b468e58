#include "aggrex/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "aggrex/errors.hpp"
#include "aggrex/kernels.hpp"
#include "aggrex/svd.hpp"

namespace aggrex {

std::vector<double> geometric_grid(double hi, double lo, std::size_t per_decade) {
  if (!(hi > 0.0) || !(lo > 0.0) || !std::isfinite(hi) || !std::isfinite(lo))
    throw InputError("grid endpoints must be finite and positive");
  if (lo > hi) throw InputError("grid endpoints must satisfy hi >= lo");
  if (per_decade == 0) throw InputError("grid density must be at least 1");
  if (lo == hi) return {hi};
  const double decades = std::log10(hi / lo);
  const std::size_t steps =
      std::max<std::size_t>(1, static_cast<std::size_t>(
                                   std::ceil(decades * static_cast<double>(per_decade) -
                                             1e-12)));
  std::vector<double> grid(steps + 1);
  const double ratio = std::log(lo / hi);
  for (std::size_t t = 0; t <= steps; ++t)
    grid[t] = hi * std::exp(ratio * static_cast<double>(t) / static_cast<double>(steps));
  grid.front() = hi;
  grid.back() = lo;
  return grid;
}

FactorPair random_feasible_pair(RngStream& rng, std::size_t d, std::size_t s) {
  if (d == 0 || s == 0) throw InputError("factor dimensions must be positive");
  FactorPair fp;
  fp.U = DenseMatrix(d, s);
  fp.V = DenseMatrix(d, s);
  for (std::size_t i = 0; i < d; ++i) {
    Vec row = rng.dirichlet_uniform(s);
    for (std::size_t j = 0; j < s; ++j) fp.U(i, j) = row[j];
  }
  for (std::size_t j = 0; j < s; ++j) {
    Vec col = rng.dirichlet_uniform(d);
    for (std::size_t i = 0; i < d; ++i) fp.V(i, j) = col[i];
  }
  return fp;
}

PathResult run_path(const EmpiricalChain& chain, const std::vector<double>& lambdas,
                    const SolverConfig& base, const RankAdaptConfig& rcfg,
                    std::size_t s0, const RngStream& rng, const DenseMatrix* P_star) {
  if (lambdas.empty()) throw InputError("lambda grid is empty");
  for (std::size_t t = 0; t < lambdas.size(); ++t) {
    if (!(lambdas[t] > 0.0)) throw InputError("lambda grid entries must be positive");
    if (t > 0 && !(lambdas[t] < lambdas[t - 1]))
      throw InputError("lambda grid must be strictly decreasing");
  }
  if (s0 == 0) throw InputError("initial rank must be positive");

  PathResult result;
  RngStream init = rng.fork(0);
  FactorPair warm = random_feasible_pair(init, chain.d, s0);

  for (std::size_t t = 0; t < lambdas.size(); ++t) {
    PathEntry entry;
    entry.lambda = lambdas[t];
    try {
      LossContext ctx(chain, lambdas[t]);
      SolverConfig scfg = base;
      scfg.lambda = lambdas[t];
      SolveReport rep =
          adapt_rank(ctx, warm, scfg, rcfg, rng.fork(t + 1), P_star);
      entry.s_hat = rep.s_hat;
      entry.F = rep.F;
      entry.diag = rep.diagnostics;
      entry.relRE = rep.diagnostics.relRE;
      entry.failed = rep.termination == "numeric-failure";
      if (!entry.failed) warm = rep.terminal;
    } catch (const std::runtime_error&) {
      entry.failed = true;
    }
    result.entries.push_back(std::move(entry));
  }

  for (const PathEntry& e : result.entries) {
    if (e.failed || !e.relRE) continue;
    if (!result.relRE_star || *e.relRE < *result.relRE_star) {
      result.relRE_star = *e.relRE;
      result.lambda_star = e.lambda;
    }
  }
  return result;
}

RegressionFit fit_loglog(const Vec& xs, const Vec& ys) {
  if (xs.size() != ys.size()) throw InputError("regression inputs differ in length");
  const std::size_t n = xs.size();
  if (n < 2) throw InputError("regression needs at least 2 points");
  Vec lx(n), ly(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (!(xs[i] > 0.0) || !(ys[i] > 0.0))
      throw InputError("log-log regression needs positive data");
    lx[i] = std::log(xs[i]);
    ly[i] = std::log(ys[i]);
  }
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += lx[i];
    my += ly[i];
  }
  mx /= static_cast<double>(n);
  my /= static_cast<double>(n);
  double sxx = 0.0, syy = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sxx += (lx[i] - mx) * (lx[i] - mx);
    syy += (ly[i] - my) * (ly[i] - my);
    sxy += (lx[i] - mx) * (ly[i] - my);
  }
  if (sxx == 0.0) throw InputError("regression needs at least 2 distinct x values");
  RegressionFit fit;
  fit.exponent = sxy / sxx;
  fit.amplitude = std::exp(my - fit.exponent * mx);
  fit.r_squared = syy == 0.0 ? 1.0 : (sxy * sxy) / (sxx * syy);
  return fit;
}

namespace {

double dist_sq(const double* a, const double* b, std::size_t q) {
  double acc = 0.0;
  for (std::size_t t = 0; t < q; ++t) {
    const double diff = a[t] - b[t];
    acc += diff * diff;
  }
  return acc;
}

KmeansResult lloyd_replicate(const DenseMatrix& points, std::size_t k,
                             std::size_t max_iters, RngStream rng) {
  const std::size_t m = points.rows(), q = points.cols();
  DenseMatrix centroids(k, q);
  Vec mindist(m, std::numeric_limits<double>::infinity());

  // k-means++ seeding by D^2 sampling
  {
    const std::size_t first = static_cast<std::size_t>(rng.uniform_below(m));
    for (std::size_t t = 0; t < q; ++t) centroids(0, t) = points(first, t);
    for (std::size_t c = 1; c < k; ++c) {
      double total = 0.0;
      for (std::size_t i = 0; i < m; ++i) {
        mindist[i] =
            std::min(mindist[i], dist_sq(points.row(i), centroids.row(c - 1), q));
        total += mindist[i];
      }
      std::size_t pick;
      if (total > 0.0) {
        const double target = rng.uniform01() * total;
        double acc = 0.0;
        pick = m - 1;
        for (std::size_t i = 0; i < m; ++i) {
          acc += mindist[i];
          if (acc >= target) {
            pick = i;
            break;
          }
        }
      } else {
        pick = static_cast<std::size_t>(rng.uniform_below(m));
      }
      for (std::size_t t = 0; t < q; ++t) centroids(c, t) = points(pick, t);
    }
  }

  std::vector<std::size_t> labels(m, 0), prev(m, k);
  for (std::size_t iter = 0; iter < max_iters; ++iter) {
    for (std::size_t i = 0; i < m; ++i) {
      std::size_t best = 0;
      double bd = dist_sq(points.row(i), centroids.row(0), q);
      for (std::size_t c = 1; c < k; ++c) {
        const double dd = dist_sq(points.row(i), centroids.row(c), q);
        if (dd < bd) {
          bd = dd;
          best = c;
        }
      }
      labels[i] = best;
    }
    if (labels == prev) break;
    prev = labels;

    std::vector<std::size_t> counts(k, 0);
    DenseMatrix sums(k, q);
    for (std::size_t i = 0; i < m; ++i) {
      ++counts[labels[i]];
      const double* p = points.row(i);
      double* srow = sums.row(labels[i]);
      for (std::size_t t = 0; t < q; ++t) srow[t] += p[t];
    }
    for (std::size_t c = 0; c < k; ++c) {
      if (counts[c] > 0) {
        for (std::size_t t = 0; t < q; ++t)
          centroids(c, t) = sums(c, t) / static_cast<double>(counts[c]);
      } else {
        // reseed the empty cluster at the point farthest from its centroid
        std::size_t far = 0;
        double fd = -1.0;
        for (std::size_t i = 0; i < m; ++i) {
          const double dd = dist_sq(points.row(i), centroids.row(labels[i]), q);
          if (dd > fd) {
            fd = dd;
            far = i;
          }
        }
        for (std::size_t t = 0; t < q; ++t) centroids(c, t) = points(far, t);
      }
    }
  }

  KmeansResult res;
  res.labels = std::move(labels);
  res.centroids = std::move(centroids);
  res.wcss = 0.0;
  for (std::size_t i = 0; i < m; ++i)
    res.wcss += dist_sq(points.row(i), res.centroids.row(res.labels[i]), q);
  return res;
}

}  // namespace

KmeansResult kmeans_pp(const DenseMatrix& points, std::size_t k, std::size_t replicates,
                       std::size_t max_iters, const RngStream& rng) {
  const std::size_t m = points.rows();
  if (k == 0 || k > m) throw InputError("cluster count must satisfy 1 <= k <= points");
  if (replicates == 0) throw InputError("replicate count must be at least 1");
  if (max_iters == 0) throw InputError("iteration cap must be at least 1");

  std::vector<KmeansResult> runs(replicates);
#pragma omp parallel for schedule(dynamic)
  for (std::ptrdiff_t r = 0; r < static_cast<std::ptrdiff_t>(replicates); ++r)
    runs[static_cast<std::size_t>(r)] =
        lloyd_replicate(points, k, max_iters, rng.fork(static_cast<std::uint64_t>(r)));

  std::size_t winner = 0;
  for (std::size_t r = 1; r < replicates; ++r)
    if (runs[r].wcss < runs[winner].wcss) winner = r;
  return std::move(runs[winner]);
}

PartitionResult partition_states(const EmpiricalChain& chain, std::size_t k,
                                 const std::string& method, std::size_t replicates,
                                 const RngStream& rng, const FactorPair* terminal) {
  if (k == 0 || k > chain.d) throw InputError("invalid cluster count");
  PartitionResult out;
  out.k = k;
  out.method = method;

  if (method == "aggregation") {
    if (!terminal) throw InputError("aggregation partition needs a solved factor pair");
    if (terminal->d() != chain.d)
      throw InputError("factor pair does not match chain dimension");
    out.embedding = terminal->U;
  } else if (method == "svd_baseline") {
    DenseMatrix weighted = scale_rows(chain.P, chain.xi);
    ThinSvd svd = thin_svd(weighted, k);
    out.embedding = DenseMatrix(chain.d, k);
    for (std::size_t i = 0; i < chain.d; ++i) {
      const double w = chain.xi[i];
      for (std::size_t j = 0; j < k; ++j)
        out.embedding(i, j) = w > 0.0 ? svd.U(i, j) / w : 0.0;
    }
  } else {
    throw InputError("unknown partition method: " + method);
  }

  KmeansResult km = kmeans_pp(out.embedding, k, replicates, 200, rng);
  out.labels = std::move(km.labels);
  out.wcss = km.wcss;
  return out;
}

double adjusted_rand_index(const std::vector<std::size_t>& a,
                           const std::vector<std::size_t>& b) {
  if (a.size() != b.size() || a.empty())
    throw InputError("label vectors must be equal-length and non-empty");
  const std::size_t n = a.size();
  std::size_t ka = 1 + *std::max_element(a.begin(), a.end());
  std::size_t kb = 1 + *std::max_element(b.begin(), b.end());
  std::vector<std::vector<std::size_t>> table(ka, std::vector<std::size_t>(kb, 0));
  std::vector<std::size_t> ra(ka, 0), rb(kb, 0);
  for (std::size_t i = 0; i < n; ++i) {
    ++table[a[i]][b[i]];
    ++ra[a[i]];
    ++rb[b[i]];
  }
  auto choose2 = [](std::size_t c) {
    return 0.5 * static_cast<double>(c) * static_cast<double>(c ? c - 1 : 0);
  };
  double sum_ij = 0.0, sum_a = 0.0, sum_b = 0.0;
  for (std::size_t i = 0; i < ka; ++i)
    for (std::size_t j = 0; j < kb; ++j) sum_ij += choose2(table[i][j]);
  for (std::size_t i = 0; i < ka; ++i) sum_a += choose2(ra[i]);
  for (std::size_t j = 0; j < kb; ++j) sum_b += choose2(rb[j]);
  const double total = choose2(n);
  const double expected = total > 0.0 ? sum_a * sum_b / total : 0.0;
  const double maxidx = 0.5 * (sum_a + sum_b);
  const double denom = maxidx - expected;
  if (denom == 0.0) return 1.0;
  return (sum_ij - expected) / denom;
}

}  // namespace aggrex
