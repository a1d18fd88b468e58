#pragma once

#include <cstdint>
#include <random>
#include <string>

#include "aggrex/matrix.hpp"

namespace aggrex {

// Seedable stream with a pinned bit-level contract: the engine is
// std::mt19937_64 (whose output sequence the standard specifies exactly) and
// every distribution transform is written out here rather than taken from
// std::*_distribution, which is implementation-defined. Identical
// (seed, algorithm) therefore reproduces identical draws everywhere.
class RngStream {
 public:
  explicit RngStream(std::uint64_t seed, std::string algorithm = "mt19937_64");

  std::uint64_t seed() const { return seed_; }
  const std::string& algorithm() const { return algorithm_; }

  std::uint64_t next_u64();
  double uniform01();                            // [0, 1), 53-bit mantissa
  double gaussian();                             // N(0,1), Marsaglia polar
  double exponential();                          // rate 1
  std::uint64_t uniform_below(std::uint64_t n);  // unbiased draw from [0, n)
  Vec dirichlet_uniform(std::size_t k);          // uniform on the (k-1)-simplex

  // Child stream derived from (seed, child); independent of this stream's
  // position, so parallel workers indexed deterministically share one parent.
  RngStream fork(std::uint64_t child) const;

 private:
  std::uint64_t seed_ = 0;
  std::string algorithm_;
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

std::uint64_t splitmix64(std::uint64_t z);

}  // namespace aggrex
