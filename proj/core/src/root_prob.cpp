#include "rootsrc/root_prob.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "rootsrc/error.hpp"
#include "rootsrc/parent_scorer.hpp"

namespace rootsrc {

std::string_view to_string(RootProbMode mode) {
  switch (mode) {
    case RootProbMode::full: return "full";
    case RootProbMode::temporal: return "temporal";
    case RootProbMode::mark: return "mark";
    case RootProbMode::running_window: return "running_window";
  }
  return "full";
}

RootProbMode parse_root_prob_mode(std::string_view text) {
  if (text == "full") return RootProbMode::full;
  if (text == "temporal") return RootProbMode::temporal;
  if (text == "mark") return RootProbMode::mark;
  if (text == "running_window") return RootProbMode::running_window;
  throw ValidationError("unknown root-probability mode '" + std::string(text) + "'");
}

std::size_t RootProbMatrix::argmax(std::size_t i) const {
  const auto row = r.row(i);
  return static_cast<std::size_t>(std::max_element(row.begin(), row.end()) - row.begin());
}

RootProbMatrix root_probabilities(const EventSequence& events, const ModelParams& params,
                                  RootProbOptions options) {
  params.validate();
  ScorerOptions scorer_options;
  switch (options.mode) {
    case RootProbMode::full: scorer_options.terms = ScoreTerms::full; break;
    case RootProbMode::temporal: scorer_options.terms = ScoreTerms::temporal_only; break;
    case RootProbMode::mark: scorer_options.terms = ScoreTerms::mark_only; break;
    case RootProbMode::running_window:
      throw ValidationError("running-window estimates come from the baselines module");
  }
  scorer_options.truncate_window = options.truncate_window;
  const ParentScorer scorer(events, params, scorer_options);

  const std::size_t n = events.size();
  const std::size_t n_sources = params.num_sources();
  RootProbMatrix out{Matrix(n, n_sources), options.mode};
  std::vector<double> w;
  ParentScorer::Workspace ws;
  for (std::size_t i = 0; i < n; ++i) {
    scorer.score(i, w, ws);
    const double m = *std::max_element(w.begin(), w.end());
    if (m == kNegInf || std::isnan(m)) {
      throw NumericalError("event " + std::to_string(i + 1) +
                           ": every parent hypothesis has zero probability");
    }
    auto row = out.r.row(i);
    row[events[i].source] += std::exp(w[0] - m);
    const std::size_t first = scorer.first_candidate(i);
    for (std::size_t k = 1; k < w.size(); ++k) {
      const double weight = std::exp(w[k] - m);
      if (weight == 0.0) continue;
      const auto prev = out.r.row(first + k - 1);
      for (std::size_t s = 0; s < n_sources; ++s) row[s] += weight * prev[s];
    }
    double total = 0.0;
    for (double v : row) total += v;
    for (double& v : row) v /= total;
  }
  return out;
}

RootProbMatrix root_probabilities_temporal(const EventSequence& events, const ModelParams& params) {
  return root_probabilities(events, params, {RootProbMode::temporal, std::nullopt});
}

RootProbMatrix root_probabilities_mark(const EventSequence& events, const ModelParams& params) {
  return root_probabilities(events, params, {RootProbMode::mark, std::nullopt});
}

namespace {

double safe_log(double x) { return x > 0.0 ? std::log(x) : kNegInf; }

struct Enumerator {
  const EventSequence& events;
  // weights[i][z]: log weight of parent choice z for event i (0 = immigrant).
  std::vector<std::vector<double>> weights;
  std::vector<std::size_t> choice;
  std::vector<std::size_t> root;
  Matrix root_mass;
  std::vector<std::vector<double>> parent_mass;
  double total = 0.0;

  void visit(std::size_t i, double log_weight) {
    const std::size_t n = events.size();
    if (i == n) {
      const double w = std::exp(log_weight);
      if (w == 0.0) return;
      total += w;
      for (std::size_t k = 0; k < n; ++k) {
        root_mass(k, root[k]) += w;
        parent_mass[k][choice[k]] += w;
      }
      return;
    }
    for (std::size_t z = 0; z <= i; ++z) {
      const double lw = weights[i][z];
      if (lw == kNegInf) continue;
      choice[i] = z;
      root[i] = z == 0 ? events[i].source : root[z - 1];
      visit(i + 1, log_weight + lw);
    }
  }
};

}  // namespace

BranchingPosterior enumerate_branchings(const EventSequence& events, const ModelParams& params) {
  params.validate();
  check_compatible(events, params);
  const std::size_t n = events.size();
  if (n > kOracleMaxEvents) {
    throw ValidationError("enumeration oracle is capped at " + std::to_string(kOracleMaxEvents) +
                          " events, got " + std::to_string(n));
  }
  const std::size_t n_sources = params.num_sources();

  Enumerator en{events, {}, std::vector<std::size_t>(n), std::vector<std::size_t>(n),
                Matrix(n, n_sources), {}, 0.0};
  double shift = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const Event& e = events[i];
    std::vector<double> w(i + 1);
    w[0] = safe_log(base_intensity(params, e.source, e.t)) + log_mark_density_immigrant(params, e);
    for (std::size_t j = 0; j < i; ++j) {
      w[j + 1] = safe_log(excited_intensity(params, e.source, events[j], e.t)) +
                 log_mark_density_offspring(params, e, events[j]);
    }
    const double m = *std::max_element(w.begin(), w.end());
    if (m == kNegInf) {
      throw NumericalError("event " + std::to_string(i + 1) +
                           ": every parent hypothesis has zero probability");
    }
    for (double& v : w) v -= m;
    shift += m;
    en.weights.push_back(std::move(w));
    en.parent_mass.emplace_back(i + 1, 0.0);
  }
  en.visit(0, 0.0);

  BranchingPosterior out;
  out.roots = RootProbMatrix{Matrix(n, n_sources), RootProbMode::full};
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t s = 0; s < n_sources; ++s) out.roots.r(i, s) = en.root_mass(i, s) / en.total;
    for (double& v : en.parent_mass[i]) v /= en.total;
  }
  out.parent_posterior = std::move(en.parent_mass);

  double integrated = 0.0;
  for (std::size_t s = 0; s < n_sources; ++s) {
    integrated += params.rho[s] * params.base_shape.integral(s, 0.0, events.horizon);
    for (const Event& e : events.events) {
      integrated += params.alpha(s, e.source) * params.mark_impact.value(e) *
                    params.kernel.integral(events.horizon - e.t);
    }
  }
  out.log_marginal = -integrated + shift + std::log(en.total);
  return out;
}

RootProbMatrix enumerate_oracle(const EventSequence& events, const ModelParams& params) {
  return enumerate_branchings(events, params).roots;
}

}  // namespace rootsrc
