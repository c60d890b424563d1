#include "rootsrc/model.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "rootsrc/error.hpp"

namespace rootsrc {

Event Event::make(double t, std::size_t source, std::vector<TokenCount> tokens) {
  std::sort(tokens.begin(), tokens.end(),
            [](const TokenCount& a, const TokenCount& b) { return a.token < b.token; });
  Event e;
  e.t = t;
  e.source = source;
  for (const auto& tc : tokens) {
    if (tc.count == 0) continue;
    if (!e.tokens.empty() && e.tokens.back().token == tc.token) {
      e.tokens.back().count += tc.count;
    } else {
      e.tokens.push_back(tc);
    }
    e.length += tc.count;
  }
  return e;
}

void EventSequence::validate() const {
  if (!(horizon >= 0.0) || !std::isfinite(horizon)) {
    throw ValidationError("observation window end must be finite and non-negative");
  }
  for (std::size_t i = 0; i < events.size(); ++i) {
    const Event& e = events[i];
    const std::string where = "event " + std::to_string(i + 1) + ": ";
    if (!(e.t >= 0.0) || e.t > horizon) {
      throw ValidationError(where + "timestamp outside [0, T]");
    }
    if (i > 0 && !(events[i - 1].t < e.t)) {
      throw ValidationError(where + "timestamps must be strictly increasing (ties are rejected;"
                                    " use jitter to repair)");
    }
    if (e.source >= num_sources) throw ValidationError(where + "source label out of range");
    std::uint64_t total = 0;
    for (std::size_t k = 0; k < e.tokens.size(); ++k) {
      if (e.tokens[k].token >= vocab_size) throw ValidationError(where + "token index out of range");
      if (k > 0 && e.tokens[k - 1].token >= e.tokens[k].token) {
        throw ValidationError(where + "token counts must be sorted and unique");
      }
      total += e.tokens[k].count;
    }
    if (total != e.length) throw ValidationError(where + "length does not match token counts");
  }
}

ExponentialKernel::ExponentialKernel(double nu) : nu_(nu) {}

double ExponentialKernel::value(double lag) const {
  return lag < 0.0 ? 0.0 : std::exp(-lag / nu_) / nu_;
}

double ExponentialKernel::log_value(double lag) const {
  return lag < 0.0 ? kNegInf : -lag / nu_ - std::log(nu_);
}

double ExponentialKernel::integral(double lag) const {
  return lag <= 0.0 ? 0.0 : -std::expm1(-lag / nu_);
}

double ExponentialKernel::sample_restricted(double u, double max_lag) const {
  // F(d) = (1 - e^{-d/nu}) / (1 - e^{-D/nu}); solve F(d) = u.
  return -nu_ * std::log1p(u * std::expm1(-max_lag / nu_));
}

BaseShape BaseShape::constant_one() {
  BaseShape shape;
  shape.value = [](std::size_t, double) { return 1.0; };
  shape.integral = [](std::size_t, double from, double to) { return to - from; };
  shape.upper_bound = 1.0;
  shape.is_constant_one = true;
  return shape;
}

MarkImpact MarkImpact::constant_one() {
  MarkImpact impact;
  impact.value = [](const Event&) { return 1.0; };
  impact.is_constant_one = true;
  return impact;
}

void ModelParams::validate() const {
  const std::size_t s = rho.size();
  if (s == 0) throw ValidationError("model must have at least one source");
  if (alpha.rows() != s || alpha.cols() != s) {
    throw ValidationError("excitation matrix must be S x S");
  }
  if (theta.rows() != s || theta.cols() == 0) {
    throw ValidationError("vocabulary table must be S x V with V > 0");
  }
  for (double r : rho) {
    if (!(r >= 0.0) || !std::isfinite(r)) throw ValidationError("rho must be finite and >= 0");
  }
  for (double a : alpha.flat()) {
    if (!(a >= 0.0) || !std::isfinite(a)) throw ValidationError("alpha must be finite and >= 0");
  }
  for (std::size_t r = 0; r < s; ++r) {
    double sum = 0.0;
    for (double v : theta.row(r)) {
      if (!(v >= 0.0)) throw ValidationError("theta entries must be >= 0");
      sum += v;
    }
    if (std::abs(sum - 1.0) > 1e-9) {
      throw ValidationError("theta row " + std::to_string(r) + " does not sum to 1");
    }
  }
  if (!(gamma >= 0.0 && gamma <= 1.0)) throw ValidationError("gamma must lie in [0, 1]");
  if (!(kernel.bandwidth() > 0.0) || !std::isfinite(kernel.bandwidth())) {
    throw ValidationError("kernel bandwidth nu must be positive");
  }
  if (!base_shape.value || !base_shape.integral) throw ValidationError("base shape is incomplete");
  if (!mark_impact.value) throw ValidationError("mark impact is incomplete");
}

void check_compatible(const EventSequence& events, const ModelParams& params) {
  if (events.num_sources != params.num_sources()) {
    throw ValidationError("event sequence has S=" + std::to_string(events.num_sources) +
                          " but parameters have S=" + std::to_string(params.num_sources()));
  }
  if (events.vocab_size != params.vocab_size()) {
    throw ValidationError("event sequence has V=" + std::to_string(events.vocab_size) +
                          " but parameters have V=" + std::to_string(params.vocab_size()));
  }
}

namespace {

void check_source(const ModelParams& params, std::size_t source) {
  if (source >= params.num_sources()) {
    throw ValidationError("source index " + std::to_string(source) + " out of range");
  }
}

}  // namespace

double base_intensity(const ModelParams& params, std::size_t source, double t) {
  check_source(params, source);
  if (t < 0.0) throw ValidationError("base intensity evaluated at negative time");
  return params.rho[source] * params.base_shape.value(source, t);
}

double excited_intensity(const ModelParams& params, std::size_t source, const Event& parent,
                         double t) {
  check_source(params, source);
  check_source(params, parent.source);
  if (!(t > parent.t)) {
    throw ValidationError("excited intensity requires t > parent timestamp");
  }
  return params.alpha(source, parent.source) * params.mark_impact.value(parent) *
         params.kernel.value(t - parent.t);
}

double total_intensity(const ModelParams& params, std::size_t source, double t,
                       std::span<const Event> history) {
  double total = base_intensity(params, source, t);
  for (const Event& e : history) {
    if (!(e.t < t)) throw ValidationError("history must contain only events strictly before t");
    total += excited_intensity(params, source, e, t);
  }
  return total;
}

double log_mark_density_immigrant(const ModelParams& params, const Event& e) {
  check_source(params, e.source);
  const auto theta = params.theta.row(e.source);
  double acc = 0.0;
  for (const auto& [v, count] : e.tokens) {
    const double p = theta[v];
    if (p <= 0.0) return kNegInf;
    acc += count * std::log(p);
  }
  return acc;
}

double log_mark_density_offspring(const ModelParams& params, const Event& e,
                                  const Event& parent) {
  check_source(params, e.source);
  if (parent.length == 0) return log_mark_density_immigrant(params, e);
  const auto theta = params.theta.row(e.source);
  const double g = params.gamma;
  const double inv_len = 1.0 / parent.length;
  double acc = 0.0;
  auto pit = parent.tokens.begin();
  for (const auto& [v, count] : e.tokens) {
    while (pit != parent.tokens.end() && pit->token < v) ++pit;
    const double inherited =
        (pit != parent.tokens.end() && pit->token == v) ? pit->count * inv_len : 0.0;
    const double p = (1.0 - g) * theta[v] + g * inherited;
    if (p <= 0.0) return kNegInf;
    acc += count * std::log(p);
  }
  return acc;
}

double excitation_mass(const ModelParams& params, const Event& e, double horizon) {
  return params.mark_impact.value(e) * params.kernel.integral(horizon - e.t);
}

double compensator(const EventSequence& events, const ModelParams& params) {
  const std::size_t n_sources = params.num_sources();
  double total = 0.0;
  for (std::size_t s = 0; s < n_sources; ++s) {
    total += params.rho[s] * params.base_shape.integral(s, 0.0, events.horizon);
  }
  std::vector<double> column_sums(n_sources, 0.0);
  for (std::size_t s = 0; s < n_sources; ++s) {
    for (std::size_t s2 = 0; s2 < n_sources; ++s2) column_sums[s2] += params.alpha(s, s2);
  }
  for (const Event& e : events.events) {
    total += column_sums[e.source] * excitation_mass(params, e, events.horizon);
  }
  return total;
}

double log_sum_exp(std::span<const double> values) {
  double m = kNegInf;
  for (double v : values) m = std::max(m, v);
  if (m == kNegInf) return kNegInf;
  if (std::isinf(m)) return m;
  double acc = 0.0;
  for (double v : values) acc += std::exp(v - m);
  return m + std::log(acc);
}

}  // namespace rootsrc
