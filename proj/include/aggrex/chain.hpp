#pragma once

#include <cstdint>
#include <vector>

#include "aggrex/matrix.hpp"
#include "aggrex/rng.hpp"

namespace aggrex {

struct Trajectory {
  std::size_t d = 0;                 // state count
  std::vector<std::size_t> states;   // i_0 .. i_n, length >= 2, each < d
};

struct EmpiricalChain {
  std::size_t d = 0;
  DenseMatrix P;   // d x d, row-stochastic
  ProbVector xi;   // length d
};

struct GroundTruthChain {
  std::size_t d = 0, r = 0;
  DenseMatrix U;   // d x r, row-stochastic
  DenseMatrix V;   // d x r, column-stochastic
  DenseMatrix P;   // U * V^T
  ProbVector xi;   // stationary distribution of P
};

struct TripRecord {
  double pickup_lon = 0, pickup_lat = 0, dropoff_lon = 0, dropoff_lat = 0;
};

struct BBox {
  double lon_min = 0, lon_max = 0, lat_min = 0, lat_max = 0;
};

struct GridCell {
  long x = 0, y = 0;
  bool operator==(const GridCell&) const = default;
};

struct BinnedChain {
  EmpiricalChain chain;
  std::vector<GridCell> coords;  // per retained state
};

void validate_trajectory(const Trajectory& traj);

// xi_hat_j = (1/n) sum_{t=1..n} 1{i_t = j}, n = length - 1.
ProbVector estimate_stationary(const Trajectory& traj);

// Row i = conditional transition frequencies where i was visited among
// i_0..i_{n-1}; rows of never-visited states fall back to uniform 1/d.
EmpiricalChain estimate_transition(const Trajectory& traj);

// Rows of U uniform on the r-simplex, columns of V uniform on the d-simplex,
// xi from power iteration on P^T (tol 1e-12, <= 1e5 iterations).
GroundTruthChain generate_ground_truth(RngStream& rng, std::size_t d, std::size_t r);

Trajectory simulate_trajectory(RngStream& rng, const GroundTruthChain& chain, std::size_t n);

// Snap trips to a square grid over bbox (half-open cells; boundary goes to
// the larger index), drop states whose pickup frequency falls below min_freq,
// remap stranded dropoffs to the nearest retained cell by grid distance.
BinnedChain bin_trip_records(const std::vector<TripRecord>& records, double cell,
                             const BBox& bbox, double min_freq);

}  // namespace aggrex
