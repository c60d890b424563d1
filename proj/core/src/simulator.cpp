#include "rootsrc/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "rootsrc/error.hpp"

namespace rootsrc {

void BranchingStructure::validate() const {
  for (std::size_t i = 0; i < parent.size(); ++i) {
    if (parent[i] > i) {
      throw ValidationError("event " + std::to_string(i + 1) + " has parent " +
                            std::to_string(parent[i]) + " which does not precede it");
    }
  }
}

void SimConfig::validate() const {
  params.validate();
  if (!(horizon > 0.0) || !std::isfinite(horizon)) {
    throw ValidationError("simulation window must be positive");
  }
  if (mean_text_length.size() != params.num_sources()) {
    throw ValidationError("need one mean text length per source");
  }
  for (double m : mean_text_length) {
    if (!(m > 0.0)) throw ValidationError("mean text lengths must be positive");
  }
  if (!params.base_shape.is_constant_one && !(params.base_shape.upper_bound > 0.0)) {
    throw ValidationError("non-constant base shape needs a positive upper bound for thinning");
  }
}

std::vector<std::size_t> trace_roots(const BranchingStructure& branching,
                                     const EventSequence& events) {
  if (branching.parent.size() != events.size()) {
    throw ValidationError("branching structure and event sequence differ in length");
  }
  branching.validate();
  std::vector<std::size_t> roots(events.size());
  for (std::size_t i = 0; i < events.size(); ++i) {
    const std::size_t p = branching.parent[i];
    roots[i] = p == 0 ? events[i].source : roots[p - 1];
  }
  return roots;
}

Matrix sample_dirichlet_rows(std::size_t rows, std::size_t cols, std::mt19937_64& rng) {
  Matrix m(rows, cols);
  std::exponential_distribution<double> unit(1.0);
  for (std::size_t r = 0; r < rows; ++r) {
    auto row = m.row(r);
    double sum = 0.0;
    for (double& v : row) {
      v = unit(rng);
      sum += v;
    }
    for (double& v : row) v /= sum;
  }
  return m;
}

double spectral_radius(const Matrix& alpha) {
  const std::size_t s = alpha.rows();
  std::vector<double> x(s, 1.0), y(s);
  double lambda = 0.0;
  for (int iter = 0; iter < 1000; ++iter) {
    double norm = 0.0;
    for (std::size_t r = 0; r < s; ++r) {
      y[r] = 0.0;
      for (std::size_t c = 0; c < s; ++c) y[r] += alpha(r, c) * x[c];
      norm = std::max(norm, y[r]);
    }
    if (norm == 0.0) return 0.0;
    for (std::size_t r = 0; r < s; ++r) x[r] = y[r] / norm;
    if (std::abs(norm - lambda) < 1e-12 * norm) return norm;
    lambda = norm;
  }
  return lambda;
}

double expected_event_count(const ModelParams& params, double horizon) {
  // y_s(t) = int_0^t kappa(t-u) lambda_bar_s(u) du satisfies
  // y' = (rho + (A - I) y) / nu, and E N = int_0^T sum_s (rho_s + (A y)_s) dt.
  const std::size_t s = params.num_sources();
  const double nu = params.kernel.bandwidth();
  const auto deriv = [&](const std::vector<double>& y, std::vector<double>& dy) {
    double rate = 0.0;
    for (std::size_t r = 0; r < s; ++r) {
      double ay = 0.0;
      for (std::size_t c = 0; c < s; ++c) ay += params.alpha(r, c) * y[c];
      const double lam = params.rho[r] + ay;
      dy[r] = (lam - y[r]) / nu;
      rate += lam;
    }
    dy[s] = rate;
  };
  const std::size_t steps =
      std::clamp<std::size_t>(static_cast<std::size_t>(std::ceil(horizon / nu * 200.0)), 200,
                              2'000'000);
  const double h = horizon / steps;
  std::vector<double> y(s + 1, 0.0), k1(s + 1), k2(s + 1), k3(s + 1), k4(s + 1), tmp(s + 1);
  for (std::size_t step = 0; step < steps; ++step) {
    deriv(y, k1);
    for (std::size_t r = 0; r <= s; ++r) tmp[r] = y[r] + 0.5 * h * k1[r];
    deriv(tmp, k2);
    for (std::size_t r = 0; r <= s; ++r) tmp[r] = y[r] + 0.5 * h * k2[r];
    deriv(tmp, k3);
    for (std::size_t r = 0; r <= s; ++r) tmp[r] = y[r] + h * k3[r];
    deriv(tmp, k4);
    for (std::size_t r = 0; r <= s; ++r) y[r] += h / 6.0 * (k1[r] + 2 * k2[r] + 2 * k3[r] + k4[r]);
  }
  return y[s];
}

namespace {

struct Generated {
  Event event;
  std::size_t parent;  // generation index + 1, 0 for immigrants
  std::uint32_t inherited = 0;
};

class MarkSampler {
 public:
  MarkSampler(const SimConfig& config) : config_(config) {
    const auto& theta = config.params.theta;
    for (std::size_t s = 0; s < theta.rows(); ++s) {
      const auto row = theta.row(s);
      vocab_.emplace_back(row.begin(), row.end());
      lengths_.emplace_back(config.mean_text_length[s]);
    }
  }

  // Returns the mark and the number of tokens copied from the parent.
  std::pair<Event, std::uint32_t> draw(std::size_t source, double t, const Event* parent,
                                       std::mt19937_64& rng) {
    std::uint32_t len = 0;
    while (len == 0) len = static_cast<std::uint32_t>(lengths_[source](rng));
    const bool can_inherit = parent != nullptr && parent->length > 0;
    std::bernoulli_distribution inherit(config_.params.gamma);
    std::vector<TokenCount> tokens;
    tokens.reserve(len);
    std::uint32_t inherited = 0;
    for (std::uint32_t k = 0; k < len; ++k) {
      if (can_inherit && inherit(rng)) {
        ++inherited;
        std::uniform_int_distribution<std::uint32_t> pos(0, parent->length - 1);
        std::uint32_t target = pos(rng);
        for (const auto& tc : parent->tokens) {
          if (target < tc.count) {
            tokens.push_back({tc.token, 1});
            break;
          }
          target -= tc.count;
        }
      } else {
        tokens.push_back({static_cast<std::uint32_t>(vocab_[source](rng)), 1});
      }
    }
    return {Event::make(t, source, std::move(tokens)), inherited};
  }

 private:
  const SimConfig& config_;
  std::vector<std::discrete_distribution<std::size_t>> vocab_;
  std::vector<std::poisson_distribution<std::uint32_t>> lengths_;
};

}  // namespace

Simulation simulate(const SimConfig& config) {
  config.validate();
  const ModelParams& params = config.params;
  const std::size_t n_sources = params.num_sources();
  const double horizon = config.horizon;

  std::size_t cap = 0;
  if (config.max_events) {
    cap = *config.max_events;
  } else {
    if (params.mark_impact.is_constant_one) {
      ModelParams bound = params;
      for (double& r : bound.rho) r *= params.base_shape.is_constant_one ? 1.0 : params.base_shape.upper_bound;
      cap = static_cast<std::size_t>(std::max(50.0 * expected_event_count(bound, horizon), 100.0));
    } else {
      cap = 10'000'000;
    }
  }

  std::mt19937_64 rng(config.seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  MarkSampler marks(config);
  std::vector<Generated> gen;

  const auto push = [&](Generated g) {
    if (gen.size() >= cap) {
      throw NumericalError("runaway cascade: more than " + std::to_string(cap) +
                           " events generated (spectral radius of A = " +
                           std::to_string(spectral_radius(params.alpha)) + ")");
    }
    gen.push_back(std::move(g));
  };

  // Immigrants.
  for (std::size_t s = 0; s < n_sources; ++s) {
    const double bound = params.base_shape.is_constant_one ? 1.0 : params.base_shape.upper_bound;
    const double mean = params.rho[s] * bound * horizon;
    if (!(mean > 0.0)) continue;
    std::poisson_distribution<std::size_t> count(mean);
    const std::size_t k = count(rng);
    for (std::size_t c = 0; c < k; ++c) {
      double t = 0.0;
      do {
        t = unif(rng) * horizon;
      } while (t <= 0.0);
      if (!params.base_shape.is_constant_one &&
          unif(rng) * bound >= params.base_shape.value(s, t)) {
        continue;
      }
      auto [event, inherited] = marks.draw(s, t, nullptr, rng);
      push({std::move(event), 0, inherited});
    }
  }

  // Offspring, breadth-first over the growing generation list.
  for (std::size_t k = 0; k < gen.size(); ++k) {
    const Event parent = gen[k].event;
    const double remaining = horizon - parent.t;
    if (!(remaining > 0.0)) continue;
    const double mass = params.mark_impact.value(parent) * params.kernel.integral(remaining);
    for (std::size_t s = 0; s < n_sources; ++s) {
      const double mean = params.alpha(s, parent.source) * mass;
      if (!(mean > 0.0)) continue;
      std::poisson_distribution<std::size_t> count(mean);
      const std::size_t children = count(rng);
      for (std::size_t c = 0; c < children; ++c) {
        double t = parent.t;
        while (!(t > parent.t && t <= horizon)) {
          t = parent.t + params.kernel.sample_restricted(unif(rng), remaining);
        }
        auto [event, inherited] = marks.draw(s, t, &parent, rng);
        push({std::move(event), k + 1, inherited});
      }
    }
  }

  std::vector<std::size_t> order(gen.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return gen[a].event.t < gen[b].event.t; });
  std::vector<std::size_t> rank(gen.size());
  for (std::size_t pos = 0; pos < order.size(); ++pos) rank[order[pos]] = pos;

  Simulation out;
  out.events.horizon = horizon;
  out.events.num_sources = n_sources;
  out.events.vocab_size = params.vocab_size();
  out.events.events.reserve(gen.size());
  out.truth.branching.parent.reserve(gen.size());
  out.truth.inherited_tokens.reserve(gen.size());
  for (std::size_t idx : order) {
    Generated& g = gen[idx];
    out.events.events.push_back(std::move(g.event));
    out.truth.branching.parent.push_back(g.parent == 0 ? 0 : rank[g.parent - 1] + 1);
    out.truth.inherited_tokens.push_back(g.inherited);
  }
  out.events.validate();
  out.truth.roots = trace_roots(out.truth.branching, out.events);
  return out;
}

double synthetic_horizon(std::size_t target_events) {
  return static_cast<double>(target_events) * (1.0 - 0.8) / 0.5;
}

SimConfig synthetic_config(double horizon, std::uint64_t seed, std::uint64_t theta_seed) {
  constexpr std::size_t kSources = 5;
  constexpr std::size_t kVocab = 5000;
  SimConfig config;
  config.horizon = horizon;
  config.seed = seed;
  config.mean_text_length = {10.0, 20.0, 30.0, 40.0, 50.0};
  ModelParams& p = config.params;
  p.rho.assign(kSources, 0.1);
  p.alpha = Matrix(kSources, kSources, 0.1);
  for (std::size_t s = 0; s < kSources; ++s) p.alpha(s, s) = 0.4;
  p.gamma = 0.3;
  p.kernel = ExponentialKernel(10.0);
  std::mt19937_64 theta_rng(theta_seed);
  p.theta = sample_dirichlet_rows(kSources, kVocab, theta_rng);
  return config;
}

}  // namespace rootsrc
