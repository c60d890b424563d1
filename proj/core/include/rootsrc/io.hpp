#pragma once

// File formats. Every format carries a schema name and version:
//   events   JSONL   header {"schema":"rootsrc.events","version":1,"T":..,"S":..,"V":..}
//                    then  {"i":1,"t":0.5,"s":2,"x":{"17":3,"40":1}}
//   truth    JSONL   header {"schema":"rootsrc.truth","version":1}
//                    then  {"i":1,"parent":0,"root":2}
//   params   JSON    {"schema":"rootsrc.params","version":1,"rho":[..],"A":[[..]],...}
//   eta      JSONL   header {"schema":"rootsrc.eta","version":1,"n":..}
//                    then  {"i":3,"parents":[0,2],"probs":[0.25,0.75]}
//   rootprob CSV     "# schema=rootsrc.rootprob version=1 mode=full"
//                    then  event_index,r_0,...,r_{S-1},argmax_source
// Sources and tokens are 0-based; event ordinals are 1-based. Doubles are
// written in shortest round-trip form.

#include <iosfwd>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "rootsrc/metrics.hpp"
#include "rootsrc/model.hpp"
#include "rootsrc/root_prob.hpp"
#include "rootsrc/simulator.hpp"
#include "rootsrc/vem.hpp"

namespace rootsrc {

inline constexpr int kSchemaVersion = 1;

void write_events(std::ostream& out, const EventSequence& events);
[[nodiscard]] EventSequence read_events(std::istream& in);

void write_truth(std::ostream& out, const GroundTruth& truth);
[[nodiscard]] GroundTruth read_truth(std::istream& in);

void write_params(std::ostream& out, const ModelParams& params);
// Base shape and mark impact are restored as the constant-one defaults; files
// with any other declared shape are rejected.
[[nodiscard]] ModelParams read_params(std::istream& in);

void write_eta(std::ostream& out, const VariationalState& eta);
[[nodiscard]] VariationalState read_eta(std::istream& in);

void write_root_probs(std::ostream& out, const RootProbMatrix& r);
[[nodiscard]] RootProbMatrix read_root_probs(std::istream& in);

void write_elbo_trace(std::ostream& out, std::span<const double> trace);

void write_eval_report(std::ostream& out, const EvalReport& report);
void print_eval_table(std::ostream& out, const EvalReport& report);

// Shortest decimal form that parses back to the same double.
[[nodiscard]] std::string format_double(double value);

// "-" selects stdin / stdout. Throw ValidationError if the file cannot be opened.
[[nodiscard]] std::unique_ptr<std::istream> open_input(const std::string& path);
[[nodiscard]] std::unique_ptr<std::ostream> open_output(const std::string& path);

}  // namespace rootsrc
