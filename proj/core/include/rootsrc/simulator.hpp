#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <random>
#include <vector>

#include "rootsrc/model.hpp"

namespace rootsrc {

// parent[i] == 0 means event i+1 is an immigrant; otherwise parent[i] is the
// 1-based ordinal of its parent event, always smaller than i+1.
struct BranchingStructure {
  std::vector<std::size_t> parent;

  // Throws ValidationError unless parent[i] <= i for every (0-based) i.
  void validate() const;
};

struct GroundTruth {
  BranchingStructure branching;
  std::vector<std::size_t> roots;  // root source of each event
  // Number of tokens of each event copied from its parent's bag of words. Only
  // filled by the simulator; empty when read back from a sidecar file.
  std::vector<std::uint32_t> inherited_tokens;
};

struct SimConfig {
  ModelParams params;
  double horizon = 0.0;
  std::vector<double> mean_text_length;  // per source, > 0
  std::uint64_t seed = 0;
  // Abort once more events than this have been generated. Defaults to 50x the
  // expected count on [0, T].
  std::optional<std::size_t> max_events;

  void validate() const;
};

struct Simulation {
  EventSequence events;
  GroundTruth truth;
};

// Exact Poisson-cluster sampler: immigrants from each base intensity, then
// every event spawns Poisson offspring per source with kernel-distributed
// lags truncated to the window. Deterministic for a given seed.
[[nodiscard]] Simulation simulate(const SimConfig& config);

// Root source of every event, following parent links to an immigrant.
[[nodiscard]] std::vector<std::size_t> trace_roots(const BranchingStructure& branching,
                                                   const EventSequence& events);

// Each row ~ Dirichlet(1, ..., 1).
[[nodiscard]] Matrix sample_dirichlet_rows(std::size_t rows, std::size_t cols,
                                           std::mt19937_64& rng);

// Expected number of events on [0, T] for a process started empty, for
// constant-one base shape and mark impact. Integrates the linear ODE satisfied
// by the mean kernel-filtered intensity.
[[nodiscard]] double expected_event_count(const ModelParams& params, double horizon);

// Spectral radius of the (nonnegative) excitation matrix, by power iteration.
[[nodiscard]] double spectral_radius(const Matrix& alpha);

// The five-source synthetic setup: rho = 0.1, nu = 10, alpha 0.4 on the
// diagonal and 0.1 elsewhere, gamma = 0.3, V = 5000, theta rows ~ Dir(1),
// mean lengths 10..50. theta is drawn from `theta_seed`.
[[nodiscard]] SimConfig synthetic_config(double horizon, std::uint64_t seed,
                                         std::uint64_t theta_seed);

// Window length giving `target_events` expected events for the synthetic
// setup (stationary rate sum(rho) / (1 - branching ratio) = 2.5).
[[nodiscard]] double synthetic_horizon(std::size_t target_events);

}  // namespace rootsrc
