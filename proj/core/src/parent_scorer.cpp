#include "rootsrc/parent_scorer.hpp"

#include <algorithm>
#include <cmath>

#include "rootsrc/error.hpp"

namespace rootsrc {

namespace {

double safe_log(double x) { return x > 0.0 ? std::log(x) : kNegInf; }

}  // namespace

ParentScorer::ParentScorer(const EventSequence& events, const ModelParams& params,
                           ScorerOptions options)
    : events_(&events),
      params_(&params),
      options_(options),
      inv_nu_(1.0 / params.kernel.bandwidth()),
      log_nu_(std::log(params.kernel.bandwidth())) {
  check_compatible(events, params);
  if (options_.truncate_window && !(*options_.truncate_window > 0.0)) {
    throw ValidationError("truncation window must be positive");
  }
  const std::size_t n = events.size();
  const std::size_t n_sources = params.num_sources();

  log_alpha_ = Matrix(n_sources, n_sources);
  for (std::size_t s = 0; s < n_sources; ++s) {
    for (std::size_t s2 = 0; s2 < n_sources; ++s2) log_alpha_(s, s2) = safe_log(params.alpha(s, s2));
  }

  first_.assign(n, 0);
  if (options_.truncate_window && options_.terms != ScoreTerms::mark_only) {
    const double reach = *options_.truncate_window * params.kernel.bandwidth();
    std::size_t lo = 0;
    for (std::size_t i = 0; i < n; ++i) {
      while (lo < i && events[i].t - events[lo].t > reach) ++lo;
      first_[i] = lo;
    }
  }

  log_base_.resize(n);
  log_beta_.resize(n);
  log_imm_.resize(n);
  offspring_base_.resize(n);
  zero_tokens_.resize(n);
  const double g = params.gamma;
  for (std::size_t i = 0; i < n; ++i) {
    const Event& e = events[i];
    log_base_[i] = safe_log(params.rho[e.source] * params.base_shape.value(e.source, e.t));
    log_beta_[i] = safe_log(params.mark_impact.value(e));
    log_imm_[i] = log_mark_density_immigrant(params, e);
    const auto theta = params.theta.row(e.source);
    double base = 0.0;
    std::uint32_t zeros = 0;
    for (const auto& [v, count] : e.tokens) {
      const double p = (1.0 - g) * theta[v];
      if (p > 0.0) {
        base += count * std::log(p);
      } else {
        ++zeros;
      }
    }
    offspring_base_[i] = base;
    zero_tokens_[i] = zeros;
  }

  if (options_.terms != ScoreTerms::temporal_only) {
    postings_.resize(events.vocab_size);
    for (std::size_t j = 0; j < n; ++j) {
      const Event& e = events[j];
      if (e.length == 0) continue;
      const double inv_len = 1.0 / e.length;
      for (const auto& [v, count] : e.tokens) {
        postings_[v].push_back({static_cast<std::uint32_t>(j), count * inv_len});
      }
    }
  }
}

void ParentScorer::score(std::size_t i, std::vector<double>& out, Workspace& ws) const {
  const auto& events = events_->events;
  const Event& child = events[i];
  const std::size_t first = first_[i];
  const std::size_t m = i - first;
  const bool use_time = options_.terms != ScoreTerms::mark_only;
  const bool use_mark = options_.terms != ScoreTerms::temporal_only;

  out.resize(1 + m);
  out[0] = (use_time ? log_base_[i] : 0.0) + (use_mark ? log_imm_[i] : 0.0);

  if (use_mark) {
    ws.correction.assign(m, 0.0);
    const bool track_zeros = zero_tokens_[i] > 0;
    if (track_zeros) ws.covered.assign(m, 0);
    const auto theta = params_->theta.row(child.source);
    const double g = params_->gamma;
    for (const auto& [v, count] : child.tokens) {
      const auto& list = postings_[v];
      auto it = std::lower_bound(list.begin(), list.end(), first,
                                 [](const Posting& p, std::size_t j) { return p.event < j; });
      const double own = (1.0 - g) * theta[v];
      for (; it != list.end() && it->event < i; ++it) {
        const std::size_t k = it->event - first;
        if (own > 0.0) {
          ws.correction[k] += count * std::log1p(g * it->normalized / own);
        } else {
          ws.covered[k] += 1;
          ws.correction[k] += count * safe_log(g * it->normalized);
        }
      }
    }
    const double base = offspring_base_[i];
    const double imm = log_imm_[i];
    for (std::size_t k = 0; k < m; ++k) {
      const std::size_t j = first + k;
      double mark;
      if (events[j].length == 0) {
        mark = imm;
      } else if (track_zeros && ws.covered[k] < zero_tokens_[i]) {
        mark = kNegInf;
      } else {
        mark = base + ws.correction[k];
      }
      out[1 + k] = mark;
    }
  } else {
    for (std::size_t k = 0; k < m; ++k) out[1 + k] = 0.0;
  }

  if (use_time) {
    const auto la = log_alpha_.row(child.source);
    const double t = child.t;
    for (std::size_t k = 0; k < m; ++k) {
      const std::size_t j = first + k;
      const Event& parent = events[j];
      out[1 + k] += la[parent.source] + log_beta_[j] - (t - parent.t) * inv_nu_ - log_nu_;
    }
  }
}

}  // namespace rootsrc
