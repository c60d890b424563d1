#pragma once

#include <cstddef>
#include <optional>

#include "rootsrc/model.hpp"
#include "rootsrc/root_prob.hpp"

namespace rootsrc {

// Running-window heuristic RW_M: the root distribution of event i is the
// normalized source histogram of the M most recent events strictly before it
// (all earlier events when `window` is empty). An event with no predecessor
// credits its own author. `include_self` counts event i as the newest member
// of its own window instead.
[[nodiscard]] RootProbMatrix running_window(const EventSequence& events,
                                            std::optional<std::size_t> window,
                                            bool include_self = false);

}  // namespace rootsrc
