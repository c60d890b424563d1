#pragma once

// Marked multivariate Hawkes process with bag-of-words marks: domain types,
// intensities, decay kernel and mark densities shared by every other module.
//
// Conventions used throughout the library:
//   * sources and vocabulary tokens are 0-based indices;
//   * events are stored in time order; the file formats number them from 1
//     so that parent index 0 can mean "immigrant";
//   * mark densities are log-masses *without* the multinomial coefficient
//     L!/prod(x_v!). The coefficient is the same for every parent hypothesis
//     of a given event, so it cancels from all normalized quantities and only
//     shifts reported log-likelihoods by a parameter-free constant.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <span>
#include <vector>

#include "rootsrc/matrix.hpp"

namespace rootsrc {

inline constexpr double kNegInf = -std::numeric_limits<double>::infinity();

struct TokenCount {
  std::uint32_t token = 0;
  std::uint32_t count = 0;

  friend bool operator==(const TokenCount&, const TokenCount&) = default;
};

// One comment: timestamp, author and sparse token counts (sorted by token).
struct Event {
  double t = 0.0;
  std::size_t source = 0;
  std::vector<TokenCount> tokens;
  std::uint32_t length = 0;  // sum of counts

  // Builds an event from (token, count) pairs in any order; merges duplicate
  // tokens and drops zero counts.
  static Event make(double t, std::size_t source, std::vector<TokenCount> tokens);

  friend bool operator==(const Event&, const Event&) = default;
};

struct EventSequence {
  std::vector<Event> events;
  double horizon = 0.0;  // observation window is [0, horizon]
  std::size_t num_sources = 0;
  std::size_t vocab_size = 0;

  [[nodiscard]] std::size_t size() const { return events.size(); }
  [[nodiscard]] bool empty() const { return events.empty(); }
  const Event& operator[](std::size_t i) const { return events[i]; }

  // Throws ValidationError on unsorted or tied timestamps, out-of-window
  // times, bad source labels or token indices, or inconsistent lengths.
  void validate() const;

  friend bool operator==(const EventSequence&, const EventSequence&) = default;
};

// kappa(t, t') = exp(-(t' - t) / nu) / nu for t' > t. Integrates to one.
class ExponentialKernel {
 public:
  explicit ExponentialKernel(double nu = 1.0);

  [[nodiscard]] double bandwidth() const { return nu_; }
  [[nodiscard]] double value(double lag) const;
  [[nodiscard]] double log_value(double lag) const;
  // Mass on (0, lag].
  [[nodiscard]] double integral(double lag) const;
  // Inverse CDF of the kernel restricted to (0, max_lag]; u in [0, 1).
  [[nodiscard]] double sample_restricted(double u, double max_lag) const;

 private:
  double nu_;
};

// Shape function mu_bar^(s)(t) of the base intensity. The default is the
// constant 1; anything else must supply its integral and an upper bound over
// the window (used by the simulator for thinning).
struct BaseShape {
  std::function<double(std::size_t source, double t)> value;
  std::function<double(std::size_t source, double from, double to)> integral;
  double upper_bound = 1.0;
  bool is_constant_one = true;

  static BaseShape constant_one();
};

// beta(x): impact of a comment's content on the excitation it produces.
struct MarkImpact {
  std::function<double(const Event&)> value;
  bool is_constant_one = true;

  static MarkImpact constant_one();
};

struct ModelParams {
  std::vector<double> rho;  // base-rate multipliers, length S
  Matrix alpha;             // S x S; row = excited source, column = exciting source
  Matrix theta;             // S x V, rows on the simplex
  double gamma = 0.5;       // vocabulary inheritance rate
  ExponentialKernel kernel{1.0};
  BaseShape base_shape = BaseShape::constant_one();
  MarkImpact mark_impact = MarkImpact::constant_one();

  [[nodiscard]] std::size_t num_sources() const { return rho.size(); }
  [[nodiscard]] std::size_t vocab_size() const { return theta.cols(); }

  // Shapes agree, rho >= 0, alpha >= 0, theta rows sum to one within 1e-9,
  // gamma in [0, 1], nu > 0. Throws ValidationError otherwise.
  void validate() const;
};

// Checks that the sequence's S and V match the parameters.
void check_compatible(const EventSequence& events, const ModelParams& params);

[[nodiscard]] double base_intensity(const ModelParams& params, std::size_t source, double t);

[[nodiscard]] double excited_intensity(const ModelParams& params, std::size_t source,
                                       const Event& parent, double t);

// mu^(s)(t) + sum over history events strictly before t of lambda_i^(s)(t).
[[nodiscard]] double total_intensity(const ModelParams& params, std::size_t source, double t,
                                     std::span<const Event> history);

// sum_v x_v log theta_v^(s). -inf when a used token has zero probability.
[[nodiscard]] double log_mark_density_immigrant(const ModelParams& params, const Event& e);

// sum_v x_v log[(1 - gamma) theta_v^(s) + gamma x~_parent,v]. Falls back to the
// immigrant density when the parent has no tokens.
[[nodiscard]] double log_mark_density_offspring(const ModelParams& params, const Event& e,
                                                const Event& parent);

// Integral of the total intensity over [0, T], summed over sources.
[[nodiscard]] double compensator(const EventSequence& events, const ModelParams& params);

// beta(x_i) * int_{t_i}^T kappa, the excitation mass event i can still deliver.
[[nodiscard]] double excitation_mass(const ModelParams& params, const Event& e, double horizon);

[[nodiscard]] double log_sum_exp(std::span<const double> values);

}  // namespace rootsrc
