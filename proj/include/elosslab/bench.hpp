#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace elosslab::tasks {

struct BenchRow {
  std::string loss;  // mse | energy | sparse-energy | kabsch
  int n = 0;
  int repeats = 0;
  double median_ms = 0.0;
  double iqr_ms = 0.0;
  std::string status;  // "ok" or "guarded" (full energy above its memory bound)
};

struct BenchReport {
  std::vector<BenchRow> rows;
  double sparse_fit_exponent = 0.0;  // log-log slope of sparse-energy times vs n
  bool sparse_subquadratic = false;  // exponent <= 1.3
};

/// Wall-time benchmark for the four continuous losses on random 2D clouds.
/// The full pairwise energy loss is not attempted at n >= 30000 (its cost and
/// pairwise storage grow quadratically); those rows are emitted as "guarded".
/// Timing pins to a single worker.
BenchReport benchmark_losses(const std::vector<int>& sizes, int repeats, std::uint64_t seed);

void write_bench_csv(const BenchReport& report, const std::string& path);

std::vector<int> default_bench_sizes();

}  // namespace elosslab::tasks
