#include "aggrex/rng.hpp"

#include <cmath>

#include "aggrex/errors.hpp"

namespace aggrex {

std::uint64_t splitmix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ull;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

RngStream::RngStream(std::uint64_t seed, std::string algorithm)
    : seed_(seed), algorithm_(std::move(algorithm)), engine_(seed) {
  if (algorithm_ != "mt19937_64")
    throw InputError("unknown rng algorithm: " + algorithm_);
}

std::uint64_t RngStream::next_u64() { return engine_(); }

double RngStream::uniform01() {
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double RngStream::gaussian() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  double u, v, s;
  do {
    u = 2.0 * uniform01() - 1.0;
    v = 2.0 * uniform01() - 1.0;
    s = u * u + v * v;
  } while (s >= 1.0 || s == 0.0);
  const double f = std::sqrt(-2.0 * std::log(s) / s);
  spare_ = v * f;
  has_spare_ = true;
  return u * f;
}

double RngStream::exponential() {
  // -log(1 - u) with u in [0,1) keeps the argument strictly positive
  return -std::log1p(-uniform01());
}

std::uint64_t RngStream::uniform_below(std::uint64_t n) {
  if (n == 0) throw NumericError("uniform_below(0)");
  const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % n);
  std::uint64_t x;
  do {
    x = next_u64();
  } while (x >= limit);
  return x % n;
}

Vec RngStream::dirichlet_uniform(std::size_t k) {
  Vec v(k);
  double total = 0.0;
  for (std::size_t i = 0; i < k; ++i) {
    v[i] = exponential();
    total += v[i];
  }
  if (total <= 0.0) {  // unreachable in practice; keep the invariant anyway
    for (double& x : v) x = 1.0 / static_cast<double>(k);
    return v;
  }
  for (double& x : v) x /= total;
  return v;
}

RngStream RngStream::fork(std::uint64_t child) const {
  return RngStream(splitmix64(seed_ + splitmix64(child + 1)), algorithm_);
}

}  // namespace aggrex
