#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

namespace rootsrc {

struct BenchOptions {
  std::vector<std::size_t> scales;        // target event counts
  std::optional<double> truncate_window;  // empty = exact O(n^2) mode
  std::size_t sweeps = 3;                 // timed EM sweeps per scale
  std::uint64_t seed = 1;
};

struct BenchRow {
  std::size_t target_events = 0;
  std::size_t events = 0;
  bool truncated = false;
  double seconds_per_sweep = 0.0;  // median over the timed sweeps
  double root_prob_seconds = 0.0;
};

// Simulates the five-source synthetic setup at each scale, runs a fixed number
// of EM sweeps and one full root-probability pass, and records wall time.
[[nodiscard]] std::vector<BenchRow> bench(const BenchOptions& options);

// Coefficient of determination of the least-squares line y = a + b x.
[[nodiscard]] double linear_fit_r2(std::span<const double> x, std::span<const double> y);

void write_bench_table(std::ostream& out, std::span<const BenchRow> rows);

}  // namespace rootsrc
