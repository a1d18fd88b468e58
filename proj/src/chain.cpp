#include "aggrex/chain.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

#include "aggrex/errors.hpp"
#include "aggrex/kernels.hpp"

namespace aggrex {

void validate_trajectory(const Trajectory& traj) {
  if (traj.states.size() < 2) throw InputError("trajectory needs at least 2 states");
  if (traj.d == 0) throw InputError("trajectory with zero state count");
  for (std::size_t s : traj.states)
    if (s >= traj.d) throw InputError("trajectory state index out of range");
}

ProbVector estimate_stationary(const Trajectory& traj) {
  validate_trajectory(traj);
  const std::size_t n = traj.states.size() - 1;
  ProbVector xi(traj.d, 0.0);
  for (std::size_t t = 1; t <= n; ++t) xi[traj.states[t]] += 1.0;
  for (double& v : xi) v /= static_cast<double>(n);
  return xi;
}

EmpiricalChain estimate_transition(const Trajectory& traj) {
  validate_trajectory(traj);
  const std::size_t d = traj.d;
  DenseMatrix counts(d, d);
  Vec from(d, 0.0);
  for (std::size_t t = 1; t < traj.states.size(); ++t) {
    counts(traj.states[t - 1], traj.states[t]) += 1.0;
    from[traj.states[t - 1]] += 1.0;
  }
  DenseMatrix P(d, d);
  for (std::size_t i = 0; i < d; ++i) {
    if (from[i] > 0.0) {
      for (std::size_t j = 0; j < d; ++j) P(i, j) = counts(i, j) / from[i];
    } else {
      for (std::size_t j = 0; j < d; ++j) P(i, j) = 1.0 / static_cast<double>(d);
    }
  }
  return EmpiricalChain{d, std::move(P), estimate_stationary(traj)};
}

namespace {

// leading left eigenvector of P, i.e. power iteration with P^T
ProbVector stationary_power(const DenseMatrix& P) {
  const std::size_t d = P.rows();
  ProbVector x(d, 1.0 / static_cast<double>(d));
  ProbVector next(d);
  for (std::size_t it = 0; it < 100000; ++it) {
    std::fill(next.begin(), next.end(), 0.0);
    for (std::size_t i = 0; i < d; ++i) {
      const double xi = x[i];
      if (xi == 0.0) continue;
      const double* pi = P.row(i);
      for (std::size_t j = 0; j < d; ++j) next[j] += xi * pi[j];
    }
    double total = 0.0;
    for (double v : next) total += v;
    if (total <= 0.0) throw NumericError("stationary_power: mass vanished");
    double diff = 0.0;
    for (std::size_t j = 0; j < d; ++j) {
      next[j] /= total;
      diff += std::fabs(next[j] - x[j]);
    }
    x.swap(next);
    if (diff < 1e-12) return x;
  }
  throw NumericError("stationary_power: no convergence in 1e5 iterations");
}

}  // namespace

GroundTruthChain generate_ground_truth(RngStream& rng, std::size_t d, std::size_t r) {
  if (r < 1 || r > d) throw InputError("generate_ground_truth: need 1 <= r <= d");
  GroundTruthChain g;
  g.d = d;
  g.r = r;
  g.U = DenseMatrix(d, r);
  g.V = DenseMatrix(d, r);
  for (std::size_t i = 0; i < d; ++i) {
    Vec row = rng.dirichlet_uniform(r);
    for (std::size_t j = 0; j < r; ++j) g.U(i, j) = row[j];
  }
  for (std::size_t j = 0; j < r; ++j) {
    Vec col = rng.dirichlet_uniform(d);
    for (std::size_t i = 0; i < d; ++i) g.V(i, j) = col[i];
  }
  g.P = matmul_nt(g.U, g.V);
  g.xi = stationary_power(g.P);
  return g;
}

namespace {

std::size_t sample_categorical(RngStream& rng, const double* w, std::size_t d) {
  const double u = rng.uniform01();
  double cum = 0.0;
  for (std::size_t j = 0; j + 1 < d; ++j) {
    cum += w[j];
    if (u < cum) return j;
  }
  return d - 1;
}

}  // namespace

Trajectory simulate_trajectory(RngStream& rng, const GroundTruthChain& chain, std::size_t n) {
  if (n < 1) throw InputError("simulate_trajectory: n >= 1 required");
  Trajectory traj;
  traj.d = chain.d;
  traj.states.resize(n + 1);
  traj.states[0] = sample_categorical(rng, chain.xi.data(), chain.d);
  for (std::size_t t = 1; t <= n; ++t)
    traj.states[t] = sample_categorical(rng, chain.P.row(traj.states[t - 1]), chain.d);
  return traj;
}

namespace {

long snap(double coord, double lo, double cell) {
  return static_cast<long>(std::floor((coord - lo) / cell));
}

}  // namespace

BinnedChain bin_trip_records(const std::vector<TripRecord>& records, double cell,
                             const BBox& bbox, double min_freq) {
  if (cell <= 0.0) throw InputError("bin_trip_records: cell size must be positive");
  if (!(bbox.lon_min < bbox.lon_max) || !(bbox.lat_min < bbox.lat_max))
    throw InputError("bin_trip_records: degenerate bbox");
  if (min_freq < 0.0 || min_freq >= 1.0)
    throw InputError("bin_trip_records: min_freq must lie in [0,1)");

  auto snap_cell = [&](double lon, double lat) -> GridCell {
    return GridCell{snap(lon, bbox.lon_min, cell), snap(lat, bbox.lat_min, cell)};
  };
  auto inside = [&](double lon, double lat) {
    return lon >= bbox.lon_min && lon < bbox.lon_max && lat >= bbox.lat_min &&
           lat < bbox.lat_max;
  };

  struct Trip {
    GridCell from, to;
  };
  std::vector<Trip> trips;
  std::map<std::pair<long, long>, std::size_t> pickup_counts;
  std::map<std::pair<long, long>, bool> seen;
  for (const TripRecord& r : records) {
    if (!std::isfinite(r.pickup_lon) || !std::isfinite(r.pickup_lat) ||
        !std::isfinite(r.dropoff_lon) || !std::isfinite(r.dropoff_lat))
      throw InputError("bin_trip_records: non-finite coordinates");
    if (!inside(r.pickup_lon, r.pickup_lat) || !inside(r.dropoff_lon, r.dropoff_lat))
      continue;
    Trip t{snap_cell(r.pickup_lon, r.pickup_lat), snap_cell(r.dropoff_lon, r.dropoff_lat)};
    trips.push_back(t);
    pickup_counts[{t.from.x, t.from.y}]++;
    seen[{t.from.x, t.from.y}] = true;
    seen[{t.to.x, t.to.y}] = true;
  }
  if (trips.empty()) throw InputError("bin_trip_records: no records inside bbox");

  const double total = static_cast<double>(trips.size());
  std::vector<GridCell> retained;
  for (const auto& [key, _] : seen) {
    auto it = pickup_counts.find(key);
    const double freq = it == pickup_counts.end() ? 0.0 : it->second / total;
    if (freq >= min_freq) retained.push_back(GridCell{key.first, key.second});
  }
  if (retained.empty()) throw InputError("bin_trip_records: no states retained");
  // std::map iteration already yields (x, y) lexicographic order
  std::map<std::pair<long, long>, std::size_t> index;
  for (std::size_t i = 0; i < retained.size(); ++i)
    index[{retained[i].x, retained[i].y}] = i;

  auto nearest_retained = [&](const GridCell& c) -> std::size_t {
    auto it = index.find({c.x, c.y});
    if (it != index.end()) return it->second;
    std::size_t best = 0;
    double best_d2 = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < retained.size(); ++i) {
      const double dx = static_cast<double>(retained[i].x - c.x);
      const double dy = static_cast<double>(retained[i].y - c.y);
      const double d2 = dx * dx + dy * dy;
      if (d2 < best_d2) {
        best_d2 = d2;
        best = i;  // ties keep the lower state index
      }
    }
    return best;
  };

  const std::size_t d = retained.size();
  DenseMatrix counts(d, d);
  Vec from(d, 0.0);
  Vec pickups(d, 0.0);
  for (const Trip& t : trips) {
    auto it = index.find({t.from.x, t.from.y});
    if (it == index.end()) continue;  // pickup state filtered out
    const std::size_t i = it->second;
    const std::size_t j = nearest_retained(t.to);
    counts(i, j) += 1.0;
    from[i] += 1.0;
    pickups[i] += 1.0;
  }

  DenseMatrix P(d, d);
  for (std::size_t i = 0; i < d; ++i) {
    if (from[i] > 0.0) {
      for (std::size_t j = 0; j < d; ++j) P(i, j) = counts(i, j) / from[i];
    } else {
      for (std::size_t j = 0; j < d; ++j) P(i, j) = 1.0 / static_cast<double>(d);
    }
  }
  double pickup_total = 0.0;
  for (double v : pickups) pickup_total += v;
  if (pickup_total <= 0.0) throw InputError("bin_trip_records: no retained pickups");
  ProbVector xi(d);
  for (std::size_t i = 0; i < d; ++i) xi[i] = pickups[i] / pickup_total;

  return BinnedChain{EmpiricalChain{d, std::move(P), std::move(xi)}, std::move(retained)};
}

}  // namespace aggrex
