#include "rootsrc/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "rootsrc/error.hpp"

namespace rootsrc {

namespace {

void check_truth(const RootProbMatrix& r, std::span<const std::size_t> truth) {
  if (truth.size() != r.num_events()) {
    throw ValidationError("root probabilities cover " + std::to_string(r.num_events()) +
                          " events but ground truth has " + std::to_string(truth.size()));
  }
  for (std::size_t root : truth) {
    if (root >= r.num_sources()) throw ValidationError("true root source out of range");
  }
}

std::size_t rank_of(std::span<const double> row, std::size_t target) {
  std::size_t rank = 0;
  for (std::size_t s = 0; s < row.size(); ++s) {
    if (row[s] > row[target] || (row[s] == row[target] && s < target)) ++rank;
  }
  return rank;
}

}  // namespace

double identification_accuracy(const RootProbMatrix& r, std::span<const std::size_t> truth) {
  return top_k_accuracy(r, truth, 1);
}

double true_root_log_probability(const RootProbMatrix& r, std::span<const std::size_t> truth) {
  check_truth(r, truth);
  double total = 0.0;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    total += std::log(std::max(r.r(i, truth[i]), kLogProbFloor));
  }
  return total;
}

double top_k_accuracy(const RootProbMatrix& r, std::span<const std::size_t> truth, std::size_t k) {
  check_truth(r, truth);
  if (truth.empty()) return 0.0;
  std::size_t hits = 0;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    if (rank_of(r.r.row(i), truth[i]) < k) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(truth.size());
}

double relative_square_error(std::span<const double> estimate, std::span<const double> truth) {
  if (estimate.size() != truth.size()) throw ValidationError("RSE operands differ in size");
  double err = 0.0;
  double norm = 0.0;
  for (std::size_t k = 0; k < truth.size(); ++k) {
    const double d = estimate[k] - truth[k];
    err += d * d;
    norm += truth[k] * truth[k];
  }
  if (norm == 0.0) throw ValidationError("RSE is undefined for an all-zero reference");
  return err / norm;
}

std::vector<double> social_power(const RootProbMatrix& r) {
  std::vector<double> power(r.num_sources(), 0.0);
  for (std::size_t i = 0; i < r.num_events(); ++i) {
    const auto row = r.r.row(i);
    for (std::size_t s = 0; s < power.size(); ++s) power[s] += row[s];
  }
  return power;
}

std::vector<std::size_t> map_parents(const VariationalState& eta) {
  std::vector<std::size_t> parent(eta.num_events(), 0);
  for (std::size_t i = 0; i < eta.num_events(); ++i) {
    const auto ids = eta.parents_of(i);
    const auto p = eta.probs_of(i);
    double best = -1.0;
    for (std::size_t k = 0; k < ids.size(); ++k) {
      // ids are sorted, so strict > keeps the lowest index on ties
      if (p[k] > best) {
        best = p[k];
        parent[i] = ids[k];
      }
    }
  }
  return parent;
}

std::vector<Conversation> mini_conversations(const VariationalState& eta,
                                             const EventSequence& events) {
  if (eta.num_events() != events.size()) {
    throw ValidationError("eta and event sequence differ in length");
  }
  const auto parent = map_parents(eta);
  std::vector<std::size_t> tree(parent.size());
  std::vector<Conversation> out;
  for (std::size_t i = 0; i < parent.size(); ++i) {
    if (parent[i] == 0) {
      tree[i] = out.size();
      out.push_back({i + 1, {i + 1}});
    } else {
      tree[i] = tree[parent[i] - 1];
      out[tree[i]].comments.push_back(i + 1);
    }
  }
  return out;
}

double parent_recovery_accuracy(std::span<const std::size_t> predicted,
                                std::span<const std::size_t> truth) {
  if (predicted.size() != truth.size()) throw ValidationError("parent lists differ in length");
  if (truth.empty()) return 0.0;
  std::size_t hits = 0;
  for (std::size_t i = 0; i < truth.size(); ++i) hits += predicted[i] == truth[i] ? 1 : 0;
  return static_cast<double>(hits) / static_cast<double>(truth.size());
}

double random_parent_accuracy(std::size_t n) {
  if (n == 0) return 0.0;
  double acc = 0.0;
  for (std::size_t i = 1; i <= n; ++i) acc += 1.0 / static_cast<double>(i);
  return acc / static_cast<double>(n);
}

EvalReport evaluate(const RootProbMatrix& r, std::span<const std::size_t> truth,
                    std::span<const std::size_t> ks, const ModelParams* estimate,
                    const ModelParams* true_params) {
  EvalReport report;
  report.n_events = r.num_events();
  report.accuracy = identification_accuracy(r, truth);
  report.log_prob = true_root_log_probability(r, truth);
  for (std::size_t k : ks) report.top_k[k] = top_k_accuracy(r, truth, k);
  report.power = social_power(r);
  if (estimate && true_params) {
    report.rse_alpha = relative_square_error(estimate->alpha.flat(), true_params->alpha.flat());
    if (estimate->theta.rows() != true_params->theta.rows()) {
      throw ValidationError("estimated and true vocabulary tables differ in shape");
    }
    for (std::size_t s = 0; s < true_params->theta.rows(); ++s) {
      report.rse_theta.push_back(
          relative_square_error(estimate->theta.row(s), true_params->theta.row(s)));
    }
  }
  return report;
}

}  // namespace rootsrc
