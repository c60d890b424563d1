#include "rootsrc/bench.hpp"

#include <algorithm>
#include <chrono>
#include <ostream>

#include "rootsrc/error.hpp"
#include "rootsrc/io.hpp"
#include "rootsrc/root_prob.hpp"
#include "rootsrc/simulator.hpp"
#include "rootsrc/vem.hpp"

namespace rootsrc {

std::vector<BenchRow> bench(const BenchOptions& options) {
  if (options.sweeps == 0) throw ValidationError("bench needs at least one sweep");
  std::vector<BenchRow> rows;
  for (std::size_t target : options.scales) {
    const SimConfig config = synthetic_config(synthetic_horizon(target), options.seed, options.seed);
    const Simulation sim = simulate(config);

    std::vector<double> sweep_seconds;
    FitOptions fit_options;
    fit_options.nu = config.params.kernel.bandwidth();
    fit_options.tol = 0.0;
    fit_options.max_iters = options.sweeps;
    fit_options.truncate_window = options.truncate_window;
    fit_options.on_sweep = [&](const SweepInfo& info) { sweep_seconds.push_back(info.seconds); };
    const FitReport report =
        fit(sim.events, PriorConfig::maximum_likelihood(sim.events.num_sources), fit_options);

    const auto start = std::chrono::steady_clock::now();
    const RootProbMatrix r =
        root_probabilities(sim.events, report.params, {RootProbMode::full, options.truncate_window});
    const std::chrono::duration<double> dp = std::chrono::steady_clock::now() - start;

    std::sort(sweep_seconds.begin(), sweep_seconds.end());
    BenchRow row;
    row.target_events = target;
    row.events = sim.events.size();
    row.truncated = options.truncate_window.has_value();
    row.seconds_per_sweep = sweep_seconds.empty() ? 0.0 : sweep_seconds[sweep_seconds.size() / 2];
    row.root_prob_seconds = dp.count();
    rows.push_back(row);
    (void)r;
  }
  return rows;
}

double linear_fit_r2(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2) throw ValidationError("need >= 2 paired points");
  const double n = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    mx += x[k];
    my += y[k];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    sxx += (x[k] - mx) * (x[k] - mx);
    sxy += (x[k] - mx) * (y[k] - my);
    syy += (y[k] - my) * (y[k] - my);
  }
  if (sxx == 0.0 || syy == 0.0) return 1.0;
  return sxy * sxy / (sxx * syy);
}

void write_bench_table(std::ostream& out, std::span<const BenchRow> rows) {
  out << "target_events,events,mode,seconds_per_sweep,root_prob_seconds\n";
  for (const BenchRow& row : rows) {
    out << row.target_events << ',' << row.events << ',' << (row.truncated ? "truncated" : "exact")
        << ',' << format_double(row.seconds_per_sweep) << ',' << format_double(row.root_prob_seconds)
        << '\n';
  }
}

}  // namespace rootsrc
