#pragma once

// Random small models and event sequences for property tests.

#include <algorithm>
#include <cstdint>
#include <random>
#include <vector>

#include "rootsrc/model.hpp"
#include "rootsrc/simulator.hpp"

namespace rootsrc::testing {

struct Instance {
  EventSequence events;
  ModelParams params;
};

inline ModelParams random_params(std::size_t sources, std::size_t vocab, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  ModelParams p;
  p.rho.resize(sources);
  for (double& r : p.rho) r = 0.05 + u(rng);
  p.alpha = Matrix(sources, sources);
  for (double& a : p.alpha.flat()) a = 0.6 * u(rng);
  p.theta = sample_dirichlet_rows(sources, vocab, rng);
  p.gamma = 0.05 + 0.9 * u(rng);
  p.kernel = ExponentialKernel(0.5 + 2.5 * u(rng));
  return p;
}

// Strictly increasing times in (0, T], random sources and 0..4 tokens.
inline EventSequence random_events(std::size_t n, std::size_t sources, std::size_t vocab,
                                   std::mt19937_64& rng, bool allow_empty_marks = false) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  EventSequence seq;
  seq.num_sources = sources;
  seq.vocab_size = vocab;
  std::vector<double> times(n);
  for (double& t : times) t = 0.01 + 5.0 * u(rng);
  std::sort(times.begin(), times.end());
  for (std::size_t i = 1; i < n; ++i) {
    if (times[i] <= times[i - 1]) times[i] = times[i - 1] + 1e-6;
  }
  seq.horizon = (n ? times.back() : 0.0) + 1.0;
  std::uniform_int_distribution<std::size_t> src(0, sources - 1);
  std::uniform_int_distribution<std::uint32_t> tok(0, static_cast<std::uint32_t>(vocab - 1));
  std::uniform_int_distribution<int> len(allow_empty_marks ? 0 : 1, 4);
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<TokenCount> tokens;
    const int l = len(rng);
    for (int k = 0; k < l; ++k) tokens.push_back({tok(rng), 1});
    seq.events.push_back(Event::make(times[i], src(rng), std::move(tokens)));
  }
  return seq;
}

inline Instance random_instance(std::size_t n, std::size_t sources, std::size_t vocab,
                                std::uint64_t seed, bool allow_empty_marks = false) {
  std::mt19937_64 rng(seed);
  Instance inst;
  inst.params = random_params(sources, vocab, rng);
  inst.events = random_events(n, sources, vocab, rng, allow_empty_marks);
  return inst;
}

}  // namespace rootsrc::testing
