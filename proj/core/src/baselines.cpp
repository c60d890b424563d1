#include "rootsrc/baselines.hpp"

#include <algorithm>

#include "rootsrc/error.hpp"

namespace rootsrc {

RootProbMatrix running_window(const EventSequence& events, std::optional<std::size_t> window,
                              bool include_self) {
  if (window && *window == 0) throw ValidationError("running window size must be >= 1");
  const std::size_t n = events.size();
  const std::size_t n_sources = events.num_sources;
  RootProbMatrix out{Matrix(n, n_sources), RootProbMode::running_window};
  std::vector<double> counts(n_sources, 0.0);
  std::size_t lo = 0;  // window is [lo, hi)
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t hi = include_self ? i + 1 : i;
    if (include_self) counts[events[i].source] += 1.0;
    if (window) {
      while (hi - lo > *window) counts[events[lo++].source] -= 1.0;
    }
    auto row = out.r.row(i);
    const std::size_t size = hi - lo;
    if (size == 0) {
      row[events[i].source] = 1.0;
    } else {
      for (std::size_t s = 0; s < n_sources; ++s) row[s] = counts[s] / static_cast<double>(size);
    }
    if (!include_self) counts[events[i].source] += 1.0;
  }
  return out;
}

}  // namespace rootsrc
