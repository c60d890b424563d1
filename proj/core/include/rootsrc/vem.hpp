#pragma once

// Variational EM for the marked Hawkes model.
//
// The posterior over parent assignments is approximated by a product of
// per-event categoricals eta_i over {immigrant, e_1, ..., e_{i-1}}. One sweep
// runs three closed-form block updates in this order:
//   eta        <- normalized intensity x mark-density weights
//   rho, alpha <- posterior-mode updates under Gamma priors
//   theta, gamma <- maximizer of a Jensen lower bound that is tight at the
//                   current theta, gamma (so the objective never decreases)

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "rootsrc/matrix.hpp"
#include "rootsrc/model.hpp"

namespace rootsrc {

// Sparse per-event parent distributions in compressed-row form. Entries of
// event i (0-based) are parents[offsets[i] .. offsets[i+1]) with parent 0
// meaning immigrant and j >= 1 the 1-based ordinal of the parent event.
struct VariationalState {
  std::vector<std::size_t> offsets{0};
  std::vector<std::uint32_t> parents;
  std::vector<double> probs;

  [[nodiscard]] std::size_t num_events() const { return offsets.size() - 1; }
  [[nodiscard]] std::span<const std::uint32_t> parents_of(std::size_t i) const {
    return {parents.data() + offsets[i], offsets[i + 1] - offsets[i]};
  }
  [[nodiscard]] std::span<const double> probs_of(std::size_t i) const {
    return {probs.data() + offsets[i], offsets[i + 1] - offsets[i]};
  }
  void append(std::span<const std::uint32_t> event_parents, std::span<const double> event_probs);

  // Uniform over the i + 1 options of every event.
  static VariationalState uniform(std::size_t n);
  // Rows sorted, in range, entries in [0, 1] summing to 1 within `tolerance`.
  void validate(double tolerance = 1e-9) const;
};

// Gamma(a, b) priors rho_s ~ Gamma(a_rho[s], b_rho), alpha_{s,s'} ~
// Gamma(a_alpha[s], b_alpha). a = 1, b = 0 recovers maximum likelihood.
struct PriorConfig {
  std::vector<double> a_rho;
  double b_rho = 0.0;
  std::vector<double> a_alpha;
  double b_alpha = 0.0;
  double c = 0.1;  // expected proportion of immigrant events

  [[nodiscard]] bool is_maximum_likelihood() const;
  void validate(std::size_t num_sources) const;

  static PriorConfig maximum_likelihood(std::size_t num_sources, double c = 0.1);
  // a_rho = a_alpha = N_s, b_rho = T / c, b_alpha = T / (1 - c).
  static PriorConfig empirical_bayes(const EventSequence& events, double c = 0.1);
};

// Which printed form of the theta/gamma update to use. `appendix` carries the
// child's counts x_i inside the parent sum, which is what maximizing the
// Jensen bound yields; `main_text` uses the parent's counts x_j and is kept
// only so the two can be compared.
enum class ThetaGammaForm { appendix, main_text };

struct RhoAlpha {
  std::vector<double> rho;
  Matrix alpha;
  std::size_t floored = 0;  // entries whose numerator hit the positivity floor
};

struct ThetaGamma {
  Matrix theta;
  double gamma = 0.5;
};

inline constexpr double kGammaMin = 1e-6;
inline constexpr double kGammaMax = 1.0 - 1e-6;
inline constexpr double kThetaFloor = 1e-12;
inline constexpr double kNumeratorFloor = 1e-12;

// Surrogate objective L~(Theta, eta), plus Gamma log-prior terms when a prior
// is given. Multinomial coefficients are excluded.
[[nodiscard]] double elbo(const EventSequence& events, const ModelParams& params,
                          const VariationalState& state, const PriorConfig* prior = nullptr);

// Exact E-step. With a truncation window only parents within window * nu are
// candidates. Entries below `prune` are not stored (0 keeps everything).
[[nodiscard]] VariationalState update_eta(const EventSequence& events, const ModelParams& params,
                                          std::optional<double> truncate_window = std::nullopt,
                                          double prune = 0.0);

// Uses params only for kernel, base shape and mark impact.
[[nodiscard]] RhoAlpha update_rho_alpha(const EventSequence& events, const ModelParams& params,
                                        const VariationalState& state, const PriorConfig& prior);

// Uses params.theta and params.gamma as the current estimates that fix the
// Jensen coefficients.
[[nodiscard]] ThetaGamma update_theta_gamma(const EventSequence& events, const ModelParams& params,
                                            const VariationalState& state,
                                            ThetaGammaForm form = ThetaGammaForm::appendix);

// The theta/gamma block's exact objective
//   sum_i sum_v x_iv [eta_i0 log theta_v + sum_j eta_ij log((1-g) theta_v + g x~_jv)].
[[nodiscard]] double theta_gamma_objective(const EventSequence& events, const ModelParams& params,
                                           const VariationalState& state);

// Data-driven deterministic starting point: theta rows are add-one smoothed
// token frequencies, gamma = 0.5, rho and alpha are prior means (or
// N_s c / T and rows of (1 - c) / S under maximum likelihood).
[[nodiscard]] ModelParams initial_params(const EventSequence& events, const PriorConfig& prior,
                                         double nu);

struct SweepInfo {
  std::size_t iteration = 0;
  double elbo = 0.0;
  double seconds = 0.0;
};

struct FitOptions {
  double nu = 1.0;  // used when no initial parameters are given
  double tol = 1e-6;
  std::size_t max_iters = 200;
  std::optional<double> truncate_window;
  double eta_prune = 1e-16;  // storage threshold for the returned eta
  // 0 disables; otherwise multiplies initial rho and alpha by 1 + U(-0.1, 0.1).
  std::uint64_t init_jitter_seed = 0;
  std::function<void(const SweepInfo&)> on_sweep;
};

struct FitReport {
  ModelParams params;
  VariationalState eta;
  // elbo_trace[k] = L~(Theta_k, eta*(Theta_k)), the objective right after the
  // E-step of sweep k; its successive differences are whole-sweep gains.
  std::vector<double> elbo_trace;
  std::size_t iterations = 0;  // completed sweeps
  bool converged = false;
  std::size_t floored = 0;
};

// Block-coordinate ascent until |dL| / |L| < tol or max_iters sweeps.
// Throws NumericalError on a NaN objective.
[[nodiscard]] FitReport fit(const EventSequence& events, const PriorConfig& prior,
                            const FitOptions& options,
                            std::optional<ModelParams> init = std::nullopt);

}  // namespace rootsrc
