#include "elosslab/bench.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <stdexcept>

#include "elosslab/csv.hpp"
#include "elosslab/energy_loss.hpp"
#include "elosslab/rigidity.hpp"

namespace elosslab::tasks {

namespace {

constexpr int kFullEnergyGuard = 30000;

volatile double g_sink = 0.0;  // defeats dead-code elimination of timed losses

double time_once_ms(const std::function<loss::LossReport()>& fn) {
  const auto t0 = std::chrono::steady_clock::now();
  const loss::LossReport rep = fn();
  const auto t1 = std::chrono::steady_clock::now();
  g_sink = g_sink + rep.value;
  return std::chrono::duration<double, std::milli>(t1 - t0).count();
}

BenchRow time_loss(const std::string& name, int n, int repeats,
                   const std::function<loss::LossReport()>& fn) {
  time_once_ms(fn);  // warmup
  std::vector<double> times(static_cast<std::size_t>(repeats));
  for (int r = 0; r < repeats; ++r) times[static_cast<std::size_t>(r)] = time_once_ms(fn);
  std::sort(times.begin(), times.end());
  const auto quantile = [&](double q) {
    const double pos = q * static_cast<double>(times.size() - 1);
    const auto lo = static_cast<std::size_t>(pos);
    const std::size_t hi = std::min(lo + 1, times.size() - 1);
    const double frac = pos - static_cast<double>(lo);
    return times[lo] * (1.0 - frac) + times[hi] * frac;
  };
  BenchRow row;
  row.loss = name;
  row.n = n;
  row.repeats = repeats;
  row.median_ms = quantile(0.5);
  row.iqr_ms = quantile(0.75) - quantile(0.25);
  row.status = "ok";
  return row;
}

}  // namespace

std::vector<int> default_bench_sizes() { return {100, 300, 1000, 3000, 10000, 30000, 100000}; }

BenchReport benchmark_losses(const std::vector<int>& sizes, int repeats, std::uint64_t seed) {
  if (repeats < 1) throw std::invalid_argument("benchmark_losses: repeats must be >= 1");
  const loss::CoefficientScheme scheme = loss::CoefficientScheme::exponential_decay(1.0);

  BenchReport report;
  std::vector<double> log_n, log_t;
  for (const int n : sizes) {
    if (n < 3) throw std::invalid_argument("benchmark_losses: sizes must be >= 3");
    rng::Engine eng(rng::derive_seed(seed, static_cast<std::uint64_t>(n)));
    geom::Matrix target(n, 2), pred(n, 2);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < 2; ++j) {
        target(i, j) = eng.normal();
        pred(i, j) = target(i, j) + 0.1 * eng.normal();
      }
    // 2d-regular edge set for the sparse loss; the rigidity filter is skipped
    // here (the rank check is cubic in n and irrelevant to timing).
    const rigidity::EdgeSet edges =
        rigidity::random_k_regular(n, 4, rng::derive_seed(seed, 7919 + static_cast<std::uint64_t>(n)));

    report.rows.push_back(
        time_loss("mse", n, repeats, [&] { return loss::mse_loss(pred, target); }));
    report.rows.push_back(
        time_loss("kabsch", n, repeats, [&] { return loss::kabsch_mse_loss(pred, target); }));
    if (n < kFullEnergyGuard) {
      report.rows.push_back(
          time_loss("energy", n, repeats, [&] { return loss::energy_loss(pred, target, scheme); }));
    } else {
      BenchRow row;
      row.loss = "energy";
      row.n = n;
      row.repeats = 0;
      row.median_ms = std::numeric_limits<double>::quiet_NaN();
      row.iqr_ms = std::numeric_limits<double>::quiet_NaN();
      row.status = "guarded";
      report.rows.push_back(row);
    }
    const BenchRow sparse_row = time_loss("sparse-energy", n, repeats, [&] {
      return loss::sparse_energy_loss(pred, target, scheme, edges);
    });
    report.rows.push_back(sparse_row);
    log_n.push_back(std::log(static_cast<double>(n)));
    log_t.push_back(std::log(std::max(sparse_row.median_ms, 1e-9)));
  }

  // Least-squares slope of log(median time) vs log(n) for the sparse loss.
  const auto m = static_cast<double>(log_n.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < log_n.size(); ++i) {
    sx += log_n[i];
    sy += log_t[i];
    sxx += log_n[i] * log_n[i];
    sxy += log_n[i] * log_t[i];
  }
  const double denom = m * sxx - sx * sx;
  report.sparse_fit_exponent = (denom != 0.0) ? (m * sxy - sx * sy) / denom : 0.0;
  report.sparse_subquadratic = report.sparse_fit_exponent <= 1.3;
  return report;
}

void write_bench_csv(const BenchReport& report, const std::string& path) {
  io::CsvWriter csv(path, "loss,n,repeats,median_ms,iqr_ms,status");
  for (const auto& row : report.rows)
    csv.row({row.loss, io::fmt_num(row.n), io::fmt_num(row.repeats), io::fmt_num(row.median_ms),
             io::fmt_num(row.iqr_ms), row.status});
}

}  // namespace elosslab::tasks
