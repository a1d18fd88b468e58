// Compares the OpenMP kernels against the serial reference implementations.
// Usage: bench_kernels [d] [reps]

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <string>

#include "aggrex/kernels.hpp"
#include "aggrex/matrix.hpp"
#include "aggrex/rng.hpp"
#include "aggrex/simplex.hpp"

namespace {

using aggrex::DenseMatrix;

double seconds_now() {
  return std::chrono::duration<double>(
             std::chrono::steady_clock::now().time_since_epoch())
      .count();
}

DenseMatrix random_matrix(aggrex::RngStream& rng, std::size_t rows, std::size_t cols) {
  DenseMatrix A(rows, cols);
  for (std::size_t t = 0; t < A.size(); ++t) A.data()[t] = rng.uniform01();
  return A;
}

template <class F>
double time_best_of(int reps, F&& fn) {
  double best = 1e300;
  for (int r = 0; r < reps; ++r) {
    const double t0 = seconds_now();
    fn();
    best = std::min(best, seconds_now() - t0);
  }
  return best;
}

void report(const char* name, double par, double ser, double max_abs_diff) {
  std::printf("%-22s %10.4f ms %10.4f ms %8.2fx   max|diff| %.3e\n", name,
              par * 1e3, ser * 1e3, ser / par, max_abs_diff);
}

double max_diff(const DenseMatrix& A, const DenseMatrix& B) {
  double m = 0.0;
  for (std::size_t t = 0; t < A.size(); ++t)
    m = std::max(m, std::fabs(A.data()[t] - B.data()[t]));
  return m;
}

}  // namespace

int main(int argc, char** argv) {
  const std::size_t d = argc > 1 ? std::strtoull(argv[1], nullptr, 10) : 400;
  const int reps = argc > 2 ? std::atoi(argv[2]) : 5;
  const std::size_t s = std::max<std::size_t>(4, d / 20);

  aggrex::RngStream rng(42);
  DenseMatrix A = random_matrix(rng, d, d);
  DenseMatrix U = random_matrix(rng, d, s);
  DenseMatrix V = random_matrix(rng, d, s);
  aggrex::Vec w(d);
  for (std::size_t i = 0; i < d; ++i) w[i] = rng.uniform01();

  std::printf("d = %zu, s = %zu, best of %d\n", d, s, reps);
  std::printf("%-22s %13s %13s %9s\n", "kernel", "parallel", "serial", "speedup");

  {
    DenseMatrix P, S;
    const double tp = time_best_of(reps, [&] { P = aggrex::matmul_nt(U, V); });
    const double ts = time_best_of(reps, [&] { S = aggrex::serial::matmul_nt(U, V); });
    report("matmul_nt (UV^T)", tp, ts, max_diff(P, S));
  }
  {
    DenseMatrix P, S;
    const double tp = time_best_of(reps, [&] { P = aggrex::matmul_nn(A, U); });
    const double ts = time_best_of(reps, [&] { S = aggrex::serial::matmul_nn(A, U); });
    report("matmul_nn (AU)", tp, ts, max_diff(P, S));
  }
  {
    DenseMatrix P, S;
    const double tp = time_best_of(reps, [&] { P = aggrex::matmul_tn(A, U); });
    const double ts = time_best_of(reps, [&] { S = aggrex::serial::matmul_tn(A, U); });
    report("matmul_tn (A^T U)", tp, ts, max_diff(P, S));
  }
  {
    double p = 0, q = 0;
    const double tp = time_best_of(reps, [&] { p = aggrex::weighted_frobenius(A, w); });
    const double ts =
        time_best_of(reps, [&] { q = aggrex::serial::weighted_frobenius(A, w); });
    report("weighted_frobenius", tp, ts, std::fabs(p - q));
  }
  {
    DenseMatrix P, S;
    const double tp = time_best_of(reps, [&] {
      P = A;
      aggrex::project_rows_inplace(P);
    });
    const double ts =
        time_best_of(reps, [&] { S = aggrex::serial::project_row_stochastic(A); });
    report("project_rows", tp, ts, max_diff(P, S));
  }
  return 0;
}
