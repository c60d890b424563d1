// rootsrc command-line tool.
//
//   rootsrc simulate   synthetic events + ground truth + generating parameters
//   rootsrc fit        variational EM on an event file
//   rootsrc root-prob  root-source probabilities under given parameters
//   rootsrc baseline   running-window estimates
//   rootsrc evaluate   accuracy / log-probability / top-k / RSE / power
//   rootsrc ingest     raw comments -> events, vocabulary, source map
//   rootsrc bench      fit and root-prob wall time against n
//
// Exit codes: 0 success, 2 invalid input, 3 numerical failure.

#include <cstdint>
#include <cstdlib>
#include <iomanip>
#include <iostream>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "rootsrc/baselines.hpp"
#include "rootsrc/bench.hpp"
#include "rootsrc/error.hpp"
#include "rootsrc/ingest.hpp"
#include "rootsrc/io.hpp"
#include "rootsrc/metrics.hpp"
#include "rootsrc/root_prob.hpp"
#include "rootsrc/simulator.hpp"
#include "rootsrc/vem.hpp"

namespace {

using namespace rootsrc;

constexpr int kExitValidation = 2;
constexpr int kExitNumerical = 3;

struct Global {
  std::uint64_t seed = 1;
  bool quiet = false;
};

struct SimulateArgs {
  std::string out = "-";
  std::string truth_out;
  std::string params_out;
  std::string params_in;
  std::size_t sources = 5;
  std::size_t vocab = 5000;
  std::optional<double> horizon;
  std::size_t target_events = 10000;
  double rho = 0.1;
  double alpha_diag = 0.4;
  double alpha_off = 0.1;
  double gamma = 0.3;
  double nu = 10.0;
  std::vector<double> mean_length;
  std::optional<std::uint64_t> theta_seed;
  std::optional<std::size_t> max_events;
};

struct FitArgs {
  std::string events = "-";
  std::string params_out = "-";
  std::string eta_out;
  std::string elbo_out;
  std::string init;
  bool ml = false;
  double c = 0.1;
  double nu = 10.0;
  double tol = 1e-6;
  std::size_t max_iters = 200;
  std::optional<double> truncate_window;
  bool jitter = false;
};

struct RootProbArgs {
  std::string events = "-";
  std::string params;
  std::string out = "-";
  std::string mode = "full";
  std::optional<double> truncate_window;
};

struct BaselineArgs {
  std::string events = "-";
  std::string out = "-";
  std::string rw = "1";
  bool include_self = false;
};

struct EvaluateArgs {
  std::string root_probs;
  std::string truth;
  std::string params;
  std::string true_params;
  std::string out = "-";
  std::vector<std::size_t> ks = {1, 2, 3};
};

struct IngestArgs {
  std::string input = "-";
  std::string out = "-";
  std::string vocab_out;
  std::string sources_out;
  std::string stop_words;
  std::size_t min_count = 2;
  std::size_t min_author_count = 5;
  std::optional<double> horizon;
  std::optional<double> jitter;
};

struct BenchArgs {
  std::vector<std::size_t> scales = {1000, 2000, 4000, 8000};
  double truncate_window = 20.0;
  bool exact = false;
  std::size_t sweeps = 3;
  std::string out = "-";
};

void note(const Global& g, const std::string& message) {
  if (!g.quiet) std::cerr << message << '\n';
}

EventSequence load_events(const std::string& path) {
  auto in = open_input(path);
  EventSequence events = read_events(*in);
  events.validate();
  return events;
}

ModelParams load_params(const std::string& path) {
  auto in = open_input(path);
  return read_params(*in);
}

void run_simulate(const Global& g, const SimulateArgs& a) {
  SimConfig config;
  config.seed = g.seed;
  if (!a.params_in.empty()) {
    config.params = load_params(a.params_in);
  } else {
    const std::size_t S = a.sources;
    if (S == 0 || a.vocab == 0) throw ValidationError("--sources and --vocab must be positive");
    ModelParams& p = config.params;
    p.rho.assign(S, a.rho);
    p.alpha = Matrix(S, S, a.alpha_off);
    for (std::size_t s = 0; s < S; ++s) p.alpha(s, s) = a.alpha_diag;
    p.gamma = a.gamma;
    if (!(a.nu > 0.0)) throw ValidationError("--nu must be positive");
    p.kernel = ExponentialKernel(a.nu);
    std::mt19937_64 theta_rng(a.theta_seed.value_or(g.seed));
    p.theta = sample_dirichlet_rows(S, a.vocab, theta_rng);
  }
  const std::size_t S = config.params.num_sources();
  if (a.mean_length.empty()) {
    for (std::size_t s = 0; s < S; ++s) config.mean_text_length.push_back(10.0 * (s + 1));
  } else if (a.mean_length.size() == 1) {
    config.mean_text_length.assign(S, a.mean_length[0]);
  } else {
    config.mean_text_length = a.mean_length;
  }
  if (a.horizon) {
    config.horizon = *a.horizon;
  } else {
    // Window expected to hold --target-events events at the stationary rate.
    double base = 0.0;
    for (double r : config.params.rho) base += r;
    const double ratio = spectral_radius(config.params.alpha);
    if (!(ratio < 1.0) || !(base > 0.0)) {
      throw ValidationError("give --T explicitly when the process has no stationary rate");
    }
    config.horizon = static_cast<double>(a.target_events) * (1.0 - ratio) / base;
  }
  config.max_events = a.max_events;

  const Simulation sim = simulate(config);
  note(g, "simulated " + std::to_string(sim.events.size()) + " events on [0, " +
              format_double(config.horizon) + "]");
  {
    auto out = open_output(a.out);
    write_events(*out, sim.events);
  }
  if (!a.truth_out.empty()) {
    auto out = open_output(a.truth_out);
    write_truth(*out, sim.truth);
  }
  if (!a.params_out.empty()) {
    auto out = open_output(a.params_out);
    write_params(*out, config.params);
  }
}

void run_fit(const Global& g, const FitArgs& a) {
  const EventSequence events = load_events(a.events);
  const PriorConfig prior = a.ml ? PriorConfig::maximum_likelihood(events.num_sources, a.c)
                                 : PriorConfig::empirical_bayes(events, a.c);
  FitOptions options;
  options.nu = a.nu;
  options.tol = a.tol;
  options.max_iters = a.max_iters;
  options.truncate_window = a.truncate_window;
  options.init_jitter_seed = a.jitter ? (g.seed == 0 ? 1 : g.seed) : 0;
  if (!g.quiet) {
    options.on_sweep = [](const SweepInfo& info) {
      std::cerr << "sweep " << info.iteration << "  elbo " << format_double(info.elbo) << "  "
                << std::fixed << std::setprecision(3) << info.seconds << " s\n"
                << std::defaultfloat;
    };
  }
  std::optional<ModelParams> init;
  if (!a.init.empty()) init = load_params(a.init);
  const FitReport report = fit(events, prior, options, std::move(init));
  note(g, std::string(report.converged ? "converged" : "stopped") + " after " +
              std::to_string(report.iterations) + " sweeps, elbo " +
              format_double(report.elbo_trace.back()) +
              (report.floored ? ", " + std::to_string(report.floored) + " floored numerators" : ""));
  {
    auto out = open_output(a.params_out);
    write_params(*out, report.params);
  }
  if (!a.eta_out.empty()) {
    auto out = open_output(a.eta_out);
    write_eta(*out, report.eta);
  }
  if (!a.elbo_out.empty()) {
    auto out = open_output(a.elbo_out);
    write_elbo_trace(*out, report.elbo_trace);
  }
}

void run_root_prob(const Global&, const RootProbArgs& a) {
  const EventSequence events = load_events(a.events);
  const ModelParams params = load_params(a.params);
  check_compatible(events, params);
  RootProbOptions options;
  options.mode = parse_root_prob_mode(a.mode);
  options.truncate_window = a.truncate_window;
  const RootProbMatrix r = root_probabilities(events, params, options);
  auto out = open_output(a.out);
  write_root_probs(*out, r);
}

void run_baseline(const Global&, const BaselineArgs& a) {
  const EventSequence events = load_events(a.events);
  std::optional<std::size_t> window;
  if (a.rw != "inf") {
    try {
      std::size_t pos = 0;
      const long long m = std::stoll(a.rw, &pos);
      if (pos != a.rw.size() || m < 1) throw std::invalid_argument(a.rw);
      window = static_cast<std::size_t>(m);
    } catch (const std::exception&) {
      throw ValidationError("--rw takes a positive integer or 'inf', got '" + a.rw + "'");
    }
  }
  const RootProbMatrix r = running_window(events, window, a.include_self);
  auto out = open_output(a.out);
  write_root_probs(*out, r);
}

void run_evaluate(const Global&, const EvaluateArgs& a) {
  RootProbMatrix r;
  {
    auto in = open_input(a.root_probs);
    r = read_root_probs(*in);
  }
  GroundTruth truth;
  {
    auto in = open_input(a.truth);
    truth = read_truth(*in);
  }
  std::optional<ModelParams> estimate;
  std::optional<ModelParams> reference;
  if (a.params.empty() != a.true_params.empty()) {
    throw ValidationError("RSE needs both --params and --true-params");
  }
  if (!a.params.empty()) {
    estimate = load_params(a.params);
    reference = load_params(a.true_params);
  }
  const EvalReport report = evaluate(r, truth.roots, a.ks, estimate ? &*estimate : nullptr,
                                     reference ? &*reference : nullptr);
  auto out = open_output(a.out);
  write_eval_report(*out, report);
  print_eval_table(std::cerr, report);
}

std::vector<std::string> read_word_list(const std::string& path) {
  std::vector<std::string> words;
  auto in = open_input(path);
  std::string word;
  while (*in >> word) words.push_back(word);
  return words;
}

void run_ingest(const Global& g, const IngestArgs& a) {
  std::vector<RawComment> raw;
  {
    auto in = open_input(a.input);
    raw = read_raw_comments(*in);
  }
  IngestOptions options;
  options.min_count = a.min_count;
  options.min_author_count = a.min_author_count;
  options.horizon = a.horizon;
  options.jitter = a.jitter;
  if (!a.stop_words.empty()) options.stop_words = read_word_list(a.stop_words);
  const IngestResult res = ingest(raw, options);
  note(g, "ingested " + std::to_string(res.events.size()) + " events, S=" +
              std::to_string(res.events.num_sources) + ", V=" + std::to_string(res.events.vocab_size));
  {
    auto out = open_output(a.out);
    write_events(*out, res.events);
  }
  if (!a.vocab_out.empty()) {
    auto out = open_output(a.vocab_out);
    write_vocabulary(*out, res.vocabulary);
  }
  if (!a.sources_out.empty()) {
    auto out = open_output(a.sources_out);
    write_source_map(*out, res.sources);
  }
}

void run_bench(const Global& g, const BenchArgs& a) {
  BenchOptions options;
  options.scales = a.scales;
  options.sweeps = a.sweeps;
  options.seed = g.seed;
  if (!a.exact) options.truncate_window = a.truncate_window;
  const auto rows = bench(options);
  {
    auto out = open_output(a.out);
    write_bench_table(*out, rows);
  }
  if (rows.size() >= 3) {
    std::vector<double> n, t;
    for (const auto& row : rows) {
      n.push_back(static_cast<double>(row.events));
      t.push_back(row.seconds_per_sweep);
    }
    std::vector<double> n2;
    for (double v : n) n2.push_back(v * v);
    note(g, "linear fit R^2 = " + format_double(linear_fit_r2(n, t)) +
                ", fit against n^2 R^2 = " + format_double(linear_fit_r2(n2, t)));
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Root-source identification with marked multivariate Hawkes processes"};
  app.require_subcommand(1);
  app.set_config("--config", "", "Read options from a key = value file ([subcommand] sections)");
  app.get_config_formatter_base()->arrayDelimiter(',');

  Global g;
  app.add_option("--seed", g.seed, "Random seed")->capture_default_str();
  app.add_flag("-q,--quiet", g.quiet, "Only print errors");

  SimulateArgs sim;
  auto* simulate_cmd = app.add_subcommand("simulate", "Simulate a marked Hawkes process");
  simulate_cmd->add_option("-o,--out", sim.out, "Events JSONL")->capture_default_str();
  simulate_cmd->add_option("--truth-out", sim.truth_out, "Ground-truth JSONL sidecar");
  simulate_cmd->add_option("--params-out", sim.params_out, "Generating parameters JSON");
  simulate_cmd->add_option("--params", sim.params_in, "Simulate from these parameters");
  simulate_cmd->add_option("--sources", sim.sources, "Number of sources S")->capture_default_str();
  simulate_cmd->add_option("--vocab", sim.vocab, "Vocabulary size V")->capture_default_str();
  simulate_cmd->add_option("--T", sim.horizon, "Window length (default from --target-events)");
  simulate_cmd->add_option("--target-events", sim.target_events, "Expected event count")
      ->capture_default_str();
  simulate_cmd->add_option("--rho", sim.rho, "Base rate of every source")->capture_default_str();
  simulate_cmd->add_option("--alpha-diag", sim.alpha_diag, "Self-excitation")->capture_default_str();
  simulate_cmd->add_option("--alpha-off", sim.alpha_off, "Cross-excitation")->capture_default_str();
  simulate_cmd->add_option("--gamma", sim.gamma, "Vocabulary inheritance rate")->capture_default_str();
  simulate_cmd->add_option("--nu", sim.nu, "Kernel bandwidth")->capture_default_str();
  simulate_cmd->add_option("--mean-length", sim.mean_length,
                           "Mean text length per source (one value = all; default 10, 20, ...)")
      ->delimiter(',');
  simulate_cmd->add_option("--theta-seed", sim.theta_seed, "Seed for theta (default --seed)");
  simulate_cmd->add_option("--max-events", sim.max_events, "Abort above this many events");

  FitArgs fa;
  auto* fit_cmd = app.add_subcommand("fit", "Fit parameters by variational EM");
  fit_cmd->add_option("-e,--events", fa.events, "Events JSONL")->capture_default_str();
  fit_cmd->add_option("-o,--params-out", fa.params_out, "Fitted parameters JSON")
      ->capture_default_str();
  fit_cmd->add_option("--eta-out", fa.eta_out, "Parent posteriors JSONL");
  fit_cmd->add_option("--elbo-out", fa.elbo_out, "Objective trace CSV");
  fit_cmd->add_option("--init", fa.init, "Initial parameters JSON");
  auto* ml = fit_cmd->add_flag("--ml", fa.ml, "Maximum likelihood (flat priors)");
  fit_cmd->add_flag("--empirical-bayes", "Gamma priors from data summaries (default)")->excludes(ml);
  fit_cmd->add_option("--c", fa.c, "Expected immigrant proportion")->capture_default_str();
  fit_cmd->add_option("--nu", fa.nu, "Kernel bandwidth")->capture_default_str();
  fit_cmd->add_option("--tol", fa.tol, "Relative objective tolerance")->capture_default_str();
  fit_cmd->add_option("--max-iters", fa.max_iters, "Sweep limit")->capture_default_str();
  fit_cmd->add_option("--truncate-window", fa.truncate_window,
                      "Ignore parents older than w * nu (approximation)");
  fit_cmd->add_flag("--jitter", fa.jitter, "Perturb initial rho and alpha using --seed");

  RootProbArgs ra;
  auto* rp_cmd = app.add_subcommand("root-prob", "Root-source probabilities");
  rp_cmd->add_option("-e,--events", ra.events, "Events JSONL")->capture_default_str();
  rp_cmd->add_option("-p,--params", ra.params, "Parameters JSON")->required();
  rp_cmd->add_option("-o,--out", ra.out, "Output CSV")->capture_default_str();
  rp_cmd->add_option("--mode", ra.mode, "full, temporal or mark")
      ->check(CLI::IsMember({"full", "temporal", "mark"}))
      ->capture_default_str();
  rp_cmd->add_option("--truncate-window", ra.truncate_window,
                     "Ignore parents older than w * nu (approximation)");

  BaselineArgs ba;
  auto* bl_cmd = app.add_subcommand("baseline", "Running-window root estimates");
  bl_cmd->add_option("-e,--events", ba.events, "Events JSONL")->capture_default_str();
  bl_cmd->add_option("-o,--out", ba.out, "Output CSV")->capture_default_str();
  bl_cmd->add_option("--rw", ba.rw, "Window size M or 'inf'")->capture_default_str();
  bl_cmd->add_flag("--include-self", ba.include_self, "Count the event itself in its window");

  EvaluateArgs ea;
  auto* ev_cmd = app.add_subcommand("evaluate", "Score root probabilities against ground truth");
  ev_cmd->add_option("-r,--root-probs", ea.root_probs, "Root-probability CSV")->required();
  ev_cmd->add_option("-t,--truth", ea.truth, "Ground-truth JSONL")->required();
  ev_cmd->add_option("--params", ea.params, "Estimated parameters JSON (for RSE)");
  ev_cmd->add_option("--true-params", ea.true_params, "True parameters JSON (for RSE)");
  ev_cmd->add_option("-o,--out", ea.out, "Report JSON")->capture_default_str();
  ev_cmd->add_option("--top-k", ea.ks, "k values for top-k accuracy")
      ->delimiter(',')
      ->capture_default_str();

  IngestArgs ia;
  auto* in_cmd = app.add_subcommand("ingest", "Convert raw comments to events");
  in_cmd->add_option("-i,--input", ia.input, "Raw comments JSONL")->capture_default_str();
  in_cmd->add_option("-o,--out", ia.out, "Events JSONL")->capture_default_str();
  in_cmd->add_option("--vocab-out", ia.vocab_out, "Vocabulary (one token per line)");
  in_cmd->add_option("--sources-out", ia.sources_out, "Source map (one author per line)");
  in_cmd->add_option("--stop-words", ia.stop_words, "Whitespace-separated stop-word file");
  in_cmd->add_option("--min-count", ia.min_count, "Minimum token frequency")->capture_default_str();
  in_cmd->add_option("--min-author-count", ia.min_author_count, "Minimum comments per author")
      ->capture_default_str();
  in_cmd->add_option("--T", ia.horizon, "Window length (default: last timestamp)");
  in_cmd->add_option("--jitter", ia.jitter, "Add i * jitter to the i-th timestamp");

  BenchArgs bna;
  auto* bench_cmd = app.add_subcommand("bench", "Wall time of fitting and root-prob against n");
  bench_cmd->add_option("--scales", bna.scales, "Target event counts")
      ->delimiter(',')
      ->capture_default_str();
  bench_cmd->add_option("--truncate-window", bna.truncate_window, "Window in units of nu")
      ->capture_default_str();
  bench_cmd->add_flag("--exact", bna.exact, "Use the exact quadratic E-step");
  bench_cmd->add_option("--sweeps", bna.sweeps, "Timed sweeps per scale")->capture_default_str();
  bench_cmd->add_option("-o,--out", bna.out, "Output CSV")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitValidation;
  }

  if (!g.quiet) {
    // Global options plus those of the chosen subcommand.
    const std::string active = app.get_subcommands().front()->get_name() + ".";
    std::istringstream all(app.config_to_str(true, false));
    std::cerr << "# resolved configuration\n";
    for (std::string line; std::getline(all, line);) {
      const auto key_end = line.find('=');
      const std::string key = line.substr(0, key_end);
      if (key.find('.') == std::string::npos || key.rfind(active, 0) == 0) std::cerr << line << '\n';
    }
  }

  try {
    if (*simulate_cmd) run_simulate(g, sim);
    else if (*fit_cmd) run_fit(g, fa);
    else if (*rp_cmd) run_root_prob(g, ra);
    else if (*bl_cmd) run_baseline(g, ba);
    else if (*ev_cmd) run_evaluate(g, ea);
    else if (*in_cmd) run_ingest(g, ia);
    else if (*bench_cmd) run_bench(g, bna);
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitValidation;
  } catch (const NumericalError& e) {
    std::cerr << "numerical error: " << e.what() << '\n';
    return kExitNumerical;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return EXIT_FAILURE;
  }
  return EXIT_SUCCESS;
}
