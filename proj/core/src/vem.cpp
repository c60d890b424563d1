#include "rootsrc/vem.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <random>
#include <string>

#include "rootsrc/error.hpp"
#include "rootsrc/parent_scorer.hpp"

namespace rootsrc {

void VariationalState::append(std::span<const std::uint32_t> event_parents,
                              std::span<const double> event_probs) {
  parents.insert(parents.end(), event_parents.begin(), event_parents.end());
  probs.insert(probs.end(), event_probs.begin(), event_probs.end());
  offsets.push_back(parents.size());
}

VariationalState VariationalState::uniform(std::size_t n) {
  VariationalState state;
  std::vector<std::uint32_t> ids;
  std::vector<double> p;
  for (std::size_t i = 0; i < n; ++i) {
    ids.resize(i + 1);
    p.assign(i + 1, 1.0 / static_cast<double>(i + 1));
    for (std::size_t j = 0; j <= i; ++j) ids[j] = static_cast<std::uint32_t>(j);
    state.append(ids, p);
  }
  return state;
}

void VariationalState::validate(double tolerance) const {
  if (offsets.empty() || offsets.front() != 0 || offsets.back() != parents.size() ||
      parents.size() != probs.size()) {
    throw ValidationError("variational state has inconsistent storage");
  }
  for (std::size_t i = 0; i + 1 < offsets.size(); ++i) {
    const auto ids = parents_of(i);
    const auto p = probs_of(i);
    double sum = 0.0;
    for (std::size_t k = 0; k < ids.size(); ++k) {
      if (ids[k] > i || (k > 0 && ids[k - 1] >= ids[k])) {
        throw ValidationError("eta of event " + std::to_string(i + 1) +
                              " has an invalid or unsorted parent index");
      }
      if (!(p[k] >= 0.0 && p[k] <= 1.0)) {
        throw ValidationError("eta of event " + std::to_string(i + 1) + " leaves [0, 1]");
      }
      sum += p[k];
    }
    if (std::abs(sum - 1.0) > tolerance) {
      throw ValidationError("eta of event " + std::to_string(i + 1) + " does not sum to 1");
    }
  }
}

bool PriorConfig::is_maximum_likelihood() const {
  const auto one = [](double a) { return a == 1.0; };
  return b_rho == 0.0 && b_alpha == 0.0 && std::all_of(a_rho.begin(), a_rho.end(), one) &&
         std::all_of(a_alpha.begin(), a_alpha.end(), one);
}

void PriorConfig::validate(std::size_t num_sources) const {
  if (a_rho.size() != num_sources || a_alpha.size() != num_sources) {
    throw ValidationError("prior shapes need one entry per source");
  }
  for (double a : a_rho) {
    if (!(a >= 0.0)) throw ValidationError("prior shape a_rho must be >= 0");
  }
  for (double a : a_alpha) {
    if (!(a >= 0.0)) throw ValidationError("prior shape a_alpha must be >= 0");
  }
  if (!(b_rho >= 0.0) || !(b_alpha >= 0.0)) throw ValidationError("prior rates must be >= 0");
  if (!(c > 0.0 && c < 1.0)) throw ValidationError("immigrant proportion c must lie in (0, 1)");
}

PriorConfig PriorConfig::maximum_likelihood(std::size_t num_sources, double c) {
  return {std::vector<double>(num_sources, 1.0), 0.0, std::vector<double>(num_sources, 1.0), 0.0,
          c};
}

PriorConfig PriorConfig::empirical_bayes(const EventSequence& events, double c) {
  if (!(events.horizon > 0.0)) throw ValidationError("empirical Bayes needs T > 0");
  if (!(c > 0.0 && c < 1.0)) throw ValidationError("immigrant proportion c must lie in (0, 1)");
  std::vector<double> counts(events.num_sources, 0.0);
  for (const Event& e : events.events) counts[e.source] += 1.0;
  return {counts, events.horizon / c, counts, events.horizon / (1.0 - c), c};
}

namespace {

struct Posting {
  std::uint32_t event;
  double normalized;
};

std::vector<std::vector<Posting>> build_postings(const EventSequence& events) {
  std::vector<std::vector<Posting>> postings(events.vocab_size);
  for (std::size_t j = 0; j < events.size(); ++j) {
    const Event& e = events[j];
    if (e.length == 0) continue;
    const double inv_len = 1.0 / e.length;
    for (const auto& [v, count] : e.tokens) {
      postings[v].push_back({static_cast<std::uint32_t>(j), count * inv_len});
    }
  }
  return postings;
}

double inherit_share(double gamma, double theta_v, double normalized) {
  const double inherited = gamma * normalized;
  const double denom = (1.0 - gamma) * theta_v + inherited;
  return denom > 0.0 ? inherited / denom : 0.0;
}

// Sufficient statistics of one E-step for both M-step blocks. Jensen
// coefficients xi are evaluated at the parameters passed in.
class SweepStats {
 public:
  SweepStats(const EventSequence& events, const ModelParams& params)
      : events_(events),
        params_(params),
        postings_(build_postings(events)),
        immigrant_mass(params.num_sources(), 0.0),
        pair_mass(params.num_sources(), params.num_sources()),
        theta_mass(params.num_sources(), params.vocab_size()) {}

  // eta[0] immigrant, eta[1 + k] parent first + k.
  void add(std::size_t i, std::size_t first, std::span<const double> eta) {
    const Event& e = events_[i];
    const std::size_t s = e.source;
    double total = 0.0;
    for (double p : eta) total += p;
    immigrant_mass[s] += eta[0];
    double nonempty = 0.0;
    for (std::size_t k = 1; k < eta.size(); ++k) {
      const Event& parent = events_[first + k - 1];
      pair_mass(s, parent.source) += eta[k];
      if (parent.length > 0) nonempty += eta[k];
    }
    gamma_den += e.length * nonempty;

    const auto theta = params_.theta.row(s);
    const double g = params_.gamma;
    for (const auto& [v, count] : e.tokens) {
      double shared = 0.0;
      const auto& list = postings_[v];
      auto it = std::lower_bound(list.begin(), list.end(), first,
                                 [](const Posting& p, std::size_t j) { return p.event < j; });
      for (; it != list.end() && it->event < i; ++it) {
        shared += eta[1 + it->event - first] * inherit_share(g, theta[v], it->normalized);
      }
      theta_mass(s, v) += count * (total - shared);
      gamma_num += count * shared;
    }
  }

  const EventSequence& events_;
  const ModelParams& params_;
  std::vector<std::vector<Posting>> postings_;
  std::vector<double> immigrant_mass;
  Matrix pair_mass;
  Matrix theta_mass;
  double gamma_num = 0.0;
  double gamma_den = 0.0;
};

RhoAlpha solve_rho_alpha(const EventSequence& events, const ModelParams& params,
                         const PriorConfig& prior, const std::vector<double>& immigrant_mass,
                         const Matrix& pair_mass) {
  const std::size_t n_sources = params.num_sources();
  RhoAlpha out{std::vector<double>(n_sources), Matrix(n_sources, n_sources), 0};
  for (std::size_t s = 0; s < n_sources; ++s) {
    double num = prior.a_rho[s] - 1.0 + immigrant_mass[s];
    if (num < kNumeratorFloor) {
      num = kNumeratorFloor;
      ++out.floored;
    }
    const double denom = prior.b_rho + params.base_shape.integral(s, 0.0, events.horizon);
    out.rho[s] = denom > 0.0 ? num / denom : kNumeratorFloor;
  }
  std::vector<double> exposure(n_sources, 0.0);
  for (const Event& e : events.events) exposure[e.source] += excitation_mass(params, e, events.horizon);
  for (std::size_t s = 0; s < n_sources; ++s) {
    for (std::size_t s2 = 0; s2 < n_sources; ++s2) {
      double num = prior.a_alpha[s] - 1.0 + pair_mass(s, s2);
      if (num < kNumeratorFloor) {
        num = kNumeratorFloor;
        ++out.floored;
      }
      const double denom = prior.b_alpha + exposure[s2];
      out.alpha(s, s2) = denom > 0.0 ? num / denom : kNumeratorFloor;
    }
  }
  return out;
}

void normalize_theta_row(std::span<double> row, std::span<const double> fallback) {
  double sum = 0.0;
  for (double v : row) sum += v;
  if (!(sum > 0.0)) {
    std::copy(fallback.begin(), fallback.end(), row.begin());
    return;
  }
  double floored_sum = 0.0;
  for (double& v : row) {
    v = std::max(v / sum, kThetaFloor);
    floored_sum += v;
  }
  for (double& v : row) v /= floored_sum;
}

ThetaGamma solve_theta_gamma(const ModelParams& params, Matrix theta_mass, double gamma_num,
                             double gamma_den) {
  ThetaGamma out{std::move(theta_mass), params.gamma};
  for (std::size_t s = 0; s < out.theta.rows(); ++s) {
    normalize_theta_row(out.theta.row(s), params.theta.row(s));
  }
  if (gamma_den > 0.0) out.gamma = std::clamp(gamma_num / gamma_den, kGammaMin, kGammaMax);
  return out;
}

double prior_log_density(const ModelParams& params, const PriorConfig& prior) {
  double acc = 0.0;
  const std::size_t n_sources = params.num_sources();
  const auto term = [](double a, double b, double x) {
    return (a == 1.0 ? 0.0 : (a - 1.0) * std::log(x)) - b * x;
  };
  for (std::size_t s = 0; s < n_sources; ++s) {
    acc += term(prior.a_rho[s], prior.b_rho, params.rho[s]);
    for (std::size_t s2 = 0; s2 < n_sources; ++s2) {
      acc += term(prior.a_alpha[s], prior.b_alpha, params.alpha(s, s2));
    }
  }
  return acc;
}

// One E-step: eta* for every event, fed into `stats` (when given); returns
// the optimal-eta objective -compensator + sum_i log sum_z w_i(z).
double run_e_step(const EventSequence& events, const ModelParams& params,
                  std::optional<double> window, SweepStats* stats) {
  const ParentScorer scorer(events, params, {ScoreTerms::full, window});
  std::vector<double> w;
  ParentScorer::Workspace ws;
  double total = -compensator(events, params);
  for (std::size_t i = 0; i < events.size(); ++i) {
    scorer.score(i, w, ws);
    const double lse = log_sum_exp(w);
    if (lse == kNegInf || std::isnan(lse)) {
      throw NumericalError("event " + std::to_string(i + 1) +
                           ": every parent hypothesis has zero probability");
    }
    total += lse;
    if (stats) {
      for (double& v : w) v = std::exp(v - lse);
      stats->add(i, scorer.first_candidate(i), w);
    }
  }
  return total;
}

void check_state_shape(const EventSequence& events, const VariationalState& state) {
  if (state.num_events() != events.size()) {
    throw ValidationError("variational state covers " + std::to_string(state.num_events()) +
                          " events but the sequence has " + std::to_string(events.size()));
  }
  for (std::size_t i = 0; i < state.num_events(); ++i) {
    for (std::uint32_t p : state.parents_of(i)) {
      if (p > i) throw ValidationError("eta of event " + std::to_string(i + 1) + " has a future parent");
    }
  }
}

// Densifies eta_i over [immigrant, e_first, ..., e_{i-1}].
void densify(const VariationalState& state, std::size_t i, std::size_t first,
             std::vector<double>& out) {
  out.assign(1 + i - first, 0.0);
  const auto ids = state.parents_of(i);
  const auto p = state.probs_of(i);
  for (std::size_t k = 0; k < ids.size(); ++k) {
    if (ids[k] == 0) {
      out[0] += p[k];
    } else if (ids[k] - 1 >= first) {
      out[ids[k] - first] += p[k];
    } else if (p[k] > 0.0) {
      throw ValidationError("eta places mass outside the candidate window");
    }
  }
}

}  // namespace

double elbo(const EventSequence& events, const ModelParams& params, const VariationalState& state,
            const PriorConfig* prior) {
  params.validate();
  check_compatible(events, params);
  check_state_shape(events, state);
  const ParentScorer scorer(events, params);
  std::vector<double> w;
  ParentScorer::Workspace ws;
  double total = -compensator(events, params);
  for (std::size_t i = 0; i < events.size(); ++i) {
    scorer.score(i, w, ws);
    const auto ids = state.parents_of(i);
    const auto p = state.probs_of(i);
    for (std::size_t k = 0; k < ids.size(); ++k) {
      if (p[k] <= 0.0) continue;
      total += p[k] * (w[ids[k]] - std::log(p[k]));
    }
  }
  if (prior) {
    prior->validate(params.num_sources());
    total += prior_log_density(params, *prior);
  }
  return total;
}

VariationalState update_eta(const EventSequence& events, const ModelParams& params,
                            std::optional<double> truncate_window, double prune) {
  params.validate();
  const ParentScorer scorer(events, params, {ScoreTerms::full, truncate_window});
  VariationalState state;
  std::vector<double> w;
  std::vector<std::uint32_t> ids;
  std::vector<double> probs;
  ParentScorer::Workspace ws;
  for (std::size_t i = 0; i < events.size(); ++i) {
    scorer.score(i, w, ws);
    const double lse = log_sum_exp(w);
    if (lse == kNegInf || std::isnan(lse)) {
      throw NumericalError("event " + std::to_string(i + 1) +
                           ": every parent hypothesis has zero probability");
    }
    const std::size_t first = scorer.first_candidate(i);
    ids.clear();
    probs.clear();
    for (std::size_t k = 0; k < w.size(); ++k) {
      const double p = std::exp(w[k] - lse);
      if (prune > 0.0 && p < prune) continue;
      ids.push_back(k == 0 ? 0 : static_cast<std::uint32_t>(first + k));
      probs.push_back(p);
    }
    state.append(ids, probs);
  }
  return state;
}

RhoAlpha update_rho_alpha(const EventSequence& events, const ModelParams& params,
                          const VariationalState& state, const PriorConfig& prior) {
  check_compatible(events, params);
  check_state_shape(events, state);
  prior.validate(params.num_sources());
  const std::size_t n_sources = params.num_sources();
  std::vector<double> immigrant_mass(n_sources, 0.0);
  Matrix pair_mass(n_sources, n_sources);
  for (std::size_t i = 0; i < events.size(); ++i) {
    const std::size_t s = events[i].source;
    const auto ids = state.parents_of(i);
    const auto p = state.probs_of(i);
    for (std::size_t k = 0; k < ids.size(); ++k) {
      if (ids[k] == 0) {
        immigrant_mass[s] += p[k];
      } else {
        pair_mass(s, events[ids[k] - 1].source) += p[k];
      }
    }
  }
  return solve_rho_alpha(events, params, prior, immigrant_mass, pair_mass);
}

ThetaGamma update_theta_gamma(const EventSequence& events, const ModelParams& params,
                              const VariationalState& state, ThetaGammaForm form) {
  check_compatible(events, params);
  check_state_shape(events, state);
  if (form == ThetaGammaForm::appendix) {
    SweepStats stats(events, params);
    std::vector<double> dense;
    for (std::size_t i = 0; i < events.size(); ++i) {
      densify(state, i, 0, dense);
      stats.add(i, 0, dense);
    }
    return solve_theta_gamma(params, std::move(stats.theta_mass), stats.gamma_num,
                             stats.gamma_den);
  }

  // Parent-count variant, evaluated literally.
  Matrix theta_mass(params.num_sources(), params.vocab_size());
  double gamma_num = 0.0;
  double gamma_den = 0.0;
  const double g = params.gamma;
  for (std::size_t i = 0; i < events.size(); ++i) {
    const Event& e = events[i];
    const auto theta = params.theta.row(e.source);
    const auto ids = state.parents_of(i);
    const auto p = state.probs_of(i);
    for (std::size_t k = 0; k < ids.size(); ++k) {
      if (ids[k] == 0) {
        for (const auto& [v, count] : e.tokens) theta_mass(e.source, v) += p[k] * count;
        continue;
      }
      const Event& parent = events[ids[k] - 1];
      if (parent.length == 0) continue;
      gamma_den += p[k] * e.length;
      for (const auto& [v, count] : parent.tokens) {
        const double xi = inherit_share(g, theta[v], static_cast<double>(count) / parent.length);
        theta_mass(e.source, v) += p[k] * (1.0 - xi) * count;
        gamma_num += p[k] * count * xi;
      }
    }
  }
  return solve_theta_gamma(params, std::move(theta_mass), gamma_num, gamma_den);
}

double theta_gamma_objective(const EventSequence& events, const ModelParams& params,
                             const VariationalState& state) {
  check_state_shape(events, state);
  double total = 0.0;
  for (std::size_t i = 0; i < events.size(); ++i) {
    const auto ids = state.parents_of(i);
    const auto p = state.probs_of(i);
    for (std::size_t k = 0; k < ids.size(); ++k) {
      if (p[k] <= 0.0) continue;
      const double f = ids[k] == 0 ? log_mark_density_immigrant(params, events[i])
                                   : log_mark_density_offspring(params, events[i], events[ids[k] - 1]);
      total += p[k] * f;
    }
  }
  return total;
}

ModelParams initial_params(const EventSequence& events, const PriorConfig& prior, double nu) {
  const std::size_t n_sources = events.num_sources;
  const std::size_t vocab = events.vocab_size;
  if (n_sources == 0 || vocab == 0) throw ValidationError("need S > 0 and V > 0");
  if (!(events.horizon > 0.0)) throw ValidationError("observation window must have T > 0");
  prior.validate(n_sources);

  ModelParams params;
  params.kernel = ExponentialKernel(nu);
  params.rho.assign(n_sources, 0.0);
  params.alpha = Matrix(n_sources, n_sources);
  params.theta = Matrix(n_sources, vocab, 1.0);
  params.gamma = 0.5;

  std::vector<double> counts(n_sources, 0.0);
  std::vector<double> tokens(n_sources, static_cast<double>(vocab));
  for (const Event& e : events.events) {
    counts[e.source] += 1.0;
    tokens[e.source] += e.length;
    for (const auto& [v, count] : e.tokens) params.theta(e.source, v) += count;
  }
  for (std::size_t s = 0; s < n_sources; ++s) {
    for (double& v : params.theta.row(s)) v /= tokens[s];
  }

  const bool ml = prior.is_maximum_likelihood();
  for (std::size_t s = 0; s < n_sources; ++s) {
    params.rho[s] = ml ? counts[s] * prior.c / events.horizon : prior.a_rho[s] / prior.b_rho;
    params.rho[s] = std::max(params.rho[s], kNumeratorFloor);
    for (std::size_t s2 = 0; s2 < n_sources; ++s2) {
      const double a = ml ? (1.0 - prior.c) / n_sources : prior.a_alpha[s] / prior.b_alpha;
      params.alpha(s, s2) = std::max(a, kNumeratorFloor);
    }
  }
  return params;
}

FitReport fit(const EventSequence& events, const PriorConfig& prior, const FitOptions& options,
              std::optional<ModelParams> init) {
  events.validate();
  if (events.empty()) throw ValidationError("cannot fit an empty event sequence");
  if (!(options.tol >= 0.0)) throw ValidationError("tolerance must be >= 0");
  prior.validate(events.num_sources);

  FitReport report;
  report.params = init ? std::move(*init) : initial_params(events, prior, options.nu);
  ModelParams& params = report.params;
  check_compatible(events, params);
  params.gamma = std::clamp(params.gamma, kGammaMin, kGammaMax);
  if (options.init_jitter_seed != 0) {
    std::mt19937_64 rng(options.init_jitter_seed);
    std::uniform_real_distribution<double> jitter(0.9, 1.1);
    for (double& r : params.rho) r *= jitter(rng);
    for (double& a : params.alpha.flat()) a *= jitter(rng);
  }
  params.validate();

  using Clock = std::chrono::steady_clock;
  for (std::size_t iter = 0;; ++iter) {
    const auto start = Clock::now();
    SweepStats stats(events, params);
    const double value =
        run_e_step(events, params, options.truncate_window, &stats) + prior_log_density(params, prior);
    if (std::isnan(value)) {
      throw NumericalError("objective became NaN at sweep " + std::to_string(iter) +
                           " (gamma=" + std::to_string(params.gamma) + ")");
    }
    report.elbo_trace.push_back(value);
    if (iter > 0) {
      const double prev = report.elbo_trace[iter - 1];
      const double scale = std::max(std::abs(value), 1e-300);
      if (std::abs(value - prev) / scale < options.tol) {
        report.converged = true;
        break;
      }
    }
    if (iter == options.max_iters) break;

    RhoAlpha ra = solve_rho_alpha(events, params, prior, stats.immigrant_mass, stats.pair_mass);
    ThetaGamma tg =
        solve_theta_gamma(params, std::move(stats.theta_mass), stats.gamma_num, stats.gamma_den);
    params.rho = std::move(ra.rho);
    params.alpha = std::move(ra.alpha);
    params.theta = std::move(tg.theta);
    params.gamma = tg.gamma;
    report.floored += ra.floored;
    ++report.iterations;

    if (options.on_sweep) {
      const std::chrono::duration<double> elapsed = Clock::now() - start;
      options.on_sweep({report.iterations, value, elapsed.count()});
    }
  }
  report.eta = update_eta(events, params, options.truncate_window, options.eta_prune);
  return report;
}

}  // namespace rootsrc
