#include <chrono>
#include <random>
#include <sstream>
#include <string>

#include "doctest.h"
#include "random_instances.hpp"
#include "rootsrc/error.hpp"
#include "rootsrc/io.hpp"

using namespace rootsrc;

namespace {

template <typename T, typename W, typename R>
T round_trip(const T& value, W write, R read) {
  std::stringstream buffer;
  write(buffer, value);
  return read(buffer);
}

EventSequence events_rt(const EventSequence& ev) {
  return round_trip(ev, [](std::ostream& o, const EventSequence& e) { write_events(o, e); },
                    [](std::istream& i) { return read_events(i); });
}

}  // namespace

TEST_CASE("events round-trip exactly") {
  for (std::uint64_t seed = 1; seed <= 30; ++seed) {
    auto inst = testing::random_instance(1 + seed % 20, 3, 50, seed, true);
    // awkward doubles
    inst.events.events[0].t = (0.1 + 0.2) * 1e-3;
    inst.events.horizon = inst.events.horizon * (1.0 + 1e-15);
    CHECK(events_rt(inst.events) == inst.events);
  }
  EventSequence empty;
  empty.num_sources = 2;
  empty.vocab_size = 3;
  empty.horizon = 4.5;
  CHECK(events_rt(empty) == empty);
}

TEST_CASE("params round-trip exactly") {
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    std::mt19937_64 rng(seed);
    const ModelParams p = testing::random_params(1 + seed % 4, 7, rng);
    std::stringstream buffer;
    write_params(buffer, p);
    const ModelParams q = read_params(buffer);
    CHECK(q.rho == p.rho);
    CHECK(q.alpha == p.alpha);
    CHECK(q.theta == p.theta);
    CHECK(q.gamma == p.gamma);
    CHECK(q.kernel.bandwidth() == p.kernel.bandwidth());
  }
}

TEST_CASE("truth, eta and root probabilities round-trip exactly") {
  const auto inst = testing::random_instance(15, 3, 10, 4);
  const auto eta = update_eta(inst.events, inst.params, std::nullopt, 1e-3);
  std::stringstream eb;
  write_eta(eb, eta);
  const auto eta2 = read_eta(eb);
  CHECK(eta2.offsets == eta.offsets);
  CHECK(eta2.parents == eta.parents);
  CHECK(eta2.probs == eta.probs);

  const auto r = root_probabilities(inst.events, inst.params, {RootProbMode::temporal, std::nullopt});
  std::stringstream rb;
  write_root_probs(rb, r);
  const auto r2 = read_root_probs(rb);
  CHECK(r2.r == r.r);
  CHECK(r2.mode == RootProbMode::temporal);

  GroundTruth truth;
  truth.branching.parent = {0, 1, 0, 2};
  truth.roots = {1, 1, 0, 1};
  std::stringstream tb;
  write_truth(tb, truth);
  const auto truth2 = read_truth(tb);
  CHECK(truth2.branching.parent == truth.branching.parent);
  CHECK(truth2.roots == truth.roots);
}

TEST_CASE("malformed input is rejected with a location") {
  SUBCASE("wrong schema") {
    std::istringstream in(R"({"schema":"rootsrc.truth","version":1})");
    CHECK_THROWS_AS((void)read_events(in), ValidationError);
  }
  SUBCASE("version mismatch") {
    std::istringstream in(R"({"schema":"rootsrc.events","version":2,"T":1,"S":1,"V":1})");
    CHECK_THROWS_AS((void)read_events(in), ValidationError);
  }
  SUBCASE("broken line") {
    std::istringstream in("{\"schema\":\"rootsrc.events\",\"version\":1,\"T\":5,\"S\":1,\"V\":2}\n"
                          "{\"i\":1,\"t\":0.5,\"s\":0,\"x\":{\"0\":1}}\n"
                          "{\"i\":2,\"t\":\n");
    try {
      (void)read_events(in);
      FAIL("expected a validation error");
    } catch (const ValidationError& e) {
      CHECK(std::string(e.what()).find("line 3") != std::string::npos);
    }
  }
  SUBCASE("out-of-order events") {
    std::istringstream in("{\"schema\":\"rootsrc.events\",\"version\":1,\"T\":5,\"S\":1,\"V\":2}\n"
                          "{\"i\":1,\"t\":0.5,\"s\":0,\"x\":{}}\n"
                          "{\"i\":2,\"t\":0.25,\"s\":0,\"x\":{}}\n");
    CHECK_THROWS_AS((void)read_events(in), ValidationError);
  }
  SUBCASE("root-probability rows") {
    std::istringstream in("# schema=rootsrc.rootprob version=1 mode=full\n"
                          "event_index,r_0,r_1,argmax_source\n1,0.5\n");
    CHECK_THROWS_AS((void)read_root_probs(in), ValidationError);
  }
}

TEST_CASE("ten thousand events round-trip in under a second") {
  const auto inst = testing::random_instance(10000, 5, 5000, 8);
  const auto start = std::chrono::steady_clock::now();
  const auto back = events_rt(inst.events);
  const std::chrono::duration<double> elapsed = std::chrono::steady_clock::now() - start;
  MESSAGE("10^4-event round trip: " << elapsed.count() << " s");
  CHECK(back == inst.events);
  CHECK(elapsed.count() < 1.0);
}

TEST_CASE("double formatting is shortest round-trip") {
  CHECK(format_double(0.1) == "0.1");
  CHECK(std::stod(format_double(0.1 + 0.2)) == 0.1 + 0.2);
  CHECK(format_double(1e-300) == "1e-300");
}
