#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <vector>

#include "rootsrc/root_prob.hpp"
#include "rootsrc/vem.hpp"

namespace rootsrc {

inline constexpr double kLogProbFloor = 1e-12;

// Fraction of events whose most probable root (lowest index on ties) is the
// true root.
[[nodiscard]] double identification_accuracy(const RootProbMatrix& r,
                                             std::span<const std::size_t> truth);

// sum_i log r_i^(truth_i), probabilities floored at 1e-12 before the log.
[[nodiscard]] double true_root_log_probability(const RootProbMatrix& r,
                                               std::span<const std::size_t> truth);

// Fraction of events whose true root ranks among the k largest entries. A
// source outranks the truth if its probability is larger, or equal with a
// smaller index.
[[nodiscard]] double top_k_accuracy(const RootProbMatrix& r, std::span<const std::size_t> truth,
                                    std::size_t k);

// ||estimate - truth||^2 / ||truth||^2 over flattened entries.
[[nodiscard]] double relative_square_error(std::span<const double> estimate,
                                           std::span<const double> truth);

// Per-source column sums of r: expected number of events each source roots.
[[nodiscard]] std::vector<double> social_power(const RootProbMatrix& r);

struct Conversation {
  std::size_t root = 0;               // 1-based ordinal of the opening comment
  std::vector<std::size_t> comments;  // 1-based ordinals in time order, root first
};

// Most probable parent of every event under eta (0 = immigrant; ties to the
// lowest index).
[[nodiscard]] std::vector<std::size_t> map_parents(const VariationalState& eta);

// Groups events into trees by following most-probable parents.
[[nodiscard]] std::vector<Conversation> mini_conversations(const VariationalState& eta,
                                                           const EventSequence& events);

// Fraction of events whose predicted parent equals the true parent.
[[nodiscard]] double parent_recovery_accuracy(std::span<const std::size_t> predicted,
                                              std::span<const std::size_t> truth);

// Expected accuracy of a uniformly random parent choice: (1/n) sum_i 1/i.
[[nodiscard]] double random_parent_accuracy(std::size_t n);

struct EvalReport {
  double accuracy = 0.0;
  double log_prob = 0.0;
  std::map<std::size_t, double> top_k;
  std::optional<double> rse_alpha;
  std::vector<double> rse_theta;
  std::vector<double> power;
  std::size_t n_events = 0;
};

[[nodiscard]] EvalReport evaluate(const RootProbMatrix& r, std::span<const std::size_t> truth,
                                  std::span<const std::size_t> ks,
                                  const ModelParams* estimate = nullptr,
                                  const ModelParams* true_params = nullptr);

}  // namespace rootsrc
