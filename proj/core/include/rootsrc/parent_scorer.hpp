#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <vector>

#include "rootsrc/model.hpp"

namespace rootsrc {

// Which factors enter the per-parent weights.
enum class ScoreTerms {
  full,           // intensity x mark density
  temporal_only,  // intensity only
  mark_only,      // mark density only
};

struct ScorerOptions {
  ScoreTerms terms = ScoreTerms::full;
  // Approximation: ignore candidate parents older than window * nu. Disabled
  // (exact) when empty. Not applied in mark_only mode, which has no decay.
  std::optional<double> truncate_window;
};

// Log-weights of every parent hypothesis of an event:
//   immigrant:  log mu^(s_i)(t_i) + log f(x_i | t_i, s_i)
//   parent j:   log lambda_j^(s_i)(t_i) + log f(x_i | t_i, s_i, e_j)
//
// Offspring densities are evaluated as a per-event base term
// sum_v x_iv log((1-gamma) theta_v) plus corrections on the tokens shared with
// the parent, found through an inverted index. Cost per event is therefore
// O(#candidates + #shared token postings) instead of O(#candidates * L_i).
class ParentScorer {
 public:
  struct Workspace {
    std::vector<double> correction;
    std::vector<std::uint32_t> covered;
  };

  ParentScorer(const EventSequence& events, const ModelParams& params, ScorerOptions options = {});

  [[nodiscard]] std::size_t size() const { return events_->size(); }

  // Earliest (0-based) event considered as a parent of event i.
  [[nodiscard]] std::size_t first_candidate(std::size_t i) const { return first_[i]; }

  // out[0] is the immigrant weight; out[1 + (j - first_candidate(i))] is the
  // weight of parent j for j in [first_candidate(i), i).
  void score(std::size_t i, std::vector<double>& out, Workspace& ws) const;

  [[nodiscard]] double log_immigrant_density(std::size_t i) const { return log_imm_[i]; }

 private:
  struct Posting {
    std::uint32_t event;
    double normalized;  // x_jv / L_j
  };

  const EventSequence* events_;
  const ModelParams* params_;
  ScorerOptions options_;
  double inv_nu_;
  double log_nu_;
  Matrix log_alpha_;
  std::vector<std::size_t> first_;
  std::vector<double> log_base_;
  std::vector<double> log_imm_;
  std::vector<double> offspring_base_;
  std::vector<std::uint32_t> zero_tokens_;
  std::vector<double> log_beta_;
  std::vector<std::vector<Posting>> postings_;
};

}  // namespace rootsrc
