#pragma once

#include <cstddef>
#include <optional>
#include <string_view>
#include <vector>

#include "rootsrc/matrix.hpp"
#include "rootsrc/model.hpp"

namespace rootsrc {

enum class RootProbMode { full, temporal, mark, running_window };

[[nodiscard]] std::string_view to_string(RootProbMode mode);
[[nodiscard]] RootProbMode parse_root_prob_mode(std::string_view text);

// n x S table; row i holds the root-source distribution of event i.
struct RootProbMatrix {
  Matrix r;
  RootProbMode mode = RootProbMode::full;

  [[nodiscard]] std::size_t num_events() const { return r.rows(); }
  [[nodiscard]] std::size_t num_sources() const { return r.cols(); }
  // Most probable source of event i; ties go to the lowest index.
  [[nodiscard]] std::size_t argmax(std::size_t i) const;
};

struct RootProbOptions {
  RootProbMode mode = RootProbMode::full;
  // Ignore parents older than window * nu (approximation; exact when empty).
  std::optional<double> truncate_window;
};

// Forward dynamic program
//   r_i^(s) ∝ [s_i = s] w_i(immigrant) + sum_{j<i} r_j^(s) w_i(j)
// with w the per-parent weights selected by `mode` (intensity x mark density,
// intensity only, or mark density only). Rows are normalized as they are
// produced; weights are exponentiated after subtracting the per-event max.
[[nodiscard]] RootProbMatrix root_probabilities(const EventSequence& events,
                                                const ModelParams& params,
                                                RootProbOptions options = {});
[[nodiscard]] RootProbMatrix root_probabilities_temporal(const EventSequence& events,
                                                         const ModelParams& params);
[[nodiscard]] RootProbMatrix root_probabilities_mark(const EventSequence& events,
                                                     const ModelParams& params);

inline constexpr std::size_t kOracleMaxEvents = 12;

// Exact posterior quantities by enumerating every joint parent assignment.
struct BranchingPosterior {
  RootProbMatrix roots;
  // parent_posterior[i][j]: j = 0 immigrant, j >= 1 parent is event j (1-based).
  std::vector<std::vector<double>> parent_posterior;
  // log P(events | params) without multinomial coefficients.
  double log_marginal = 0.0;
};

// Brute force over all prod_i i assignments; n <= kOracleMaxEvents.
// Uses only the public intensity and density functions, never the DP path.
[[nodiscard]] BranchingPosterior enumerate_branchings(const EventSequence& events,
                                                      const ModelParams& params);
[[nodiscard]] RootProbMatrix enumerate_oracle(const EventSequence& events,
                                              const ModelParams& params);

}  // namespace rootsrc
