#include "rootsrc/io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

#include "json.hpp"
#include "rootsrc/error.hpp"

namespace rootsrc {

using nlohmann::json;

namespace {

json parse_line(const std::string& line, std::size_t line_no) {
  try {
    return json::parse(line);
  } catch (const json::exception& e) {
    throw ValidationError("line " + std::to_string(line_no) + ": malformed JSON (" + e.what() + ")");
  }
}

void check_header(const json& header, const std::string& schema, std::size_t line_no = 1) {
  if (!header.is_object() || !header.contains("schema") || header["schema"] != schema) {
    throw ValidationError("line " + std::to_string(line_no) + ": expected a '" + schema +
                          "' schema header");
  }
  if (!header.contains("version") || header["version"] != kSchemaVersion) {
    throw ValidationError("schema version mismatch for '" + schema + "': expected " +
                          std::to_string(kSchemaVersion));
  }
}

template <typename F>
auto with_line(std::size_t line_no, F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const json::exception& e) {
    throw ValidationError("line " + std::to_string(line_no) + ": " + e.what());
  }
}

bool next_content_line(std::istream& in, std::string& line, std::size_t& line_no) {
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") != std::string::npos) return true;
  }
  return false;
}

double parse_csv_double(std::string_view field, std::size_t line_no) {
  double value = 0.0;
  const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
  if (ec != std::errc() || ptr != field.data() + field.size()) {
    if (field == "inf") return INFINITY;
    if (field == "-inf") return -INFINITY;
    throw ValidationError("line " + std::to_string(line_no) + ": cannot parse number '" +
                          std::string(field) + "'");
  }
  return value;
}

std::vector<std::string_view> split_csv(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    std::string_view field = line.substr(start, comma == std::string_view::npos ? line.npos : comma - start);
    while (!field.empty() && (field.back() == '\r' || field.back() == ' ')) field.remove_suffix(1);
    while (!field.empty() && field.front() == ' ') field.remove_prefix(1);
    out.push_back(field);
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

}  // namespace

std::string format_double(double value) {
  if (std::isnan(value)) return "nan";
  if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, value);
  return std::string(buf, ptr);
}

void write_events(std::ostream& out, const EventSequence& events) {
  json header = {{"schema", "rootsrc.events"},
                 {"version", kSchemaVersion},
                 {"T", events.horizon},
                 {"S", events.num_sources},
                 {"V", events.vocab_size}};
  out << header.dump() << '\n';
  for (std::size_t i = 0; i < events.size(); ++i) {
    const Event& e = events[i];
    json x = json::object();
    for (const auto& [v, count] : e.tokens) x[std::to_string(v)] = count;
    json line = {{"i", i + 1}, {"t", e.t}, {"s", e.source}, {"x", std::move(x)}};
    out << line.dump() << '\n';
  }
}

EventSequence read_events(std::istream& in) {
  std::string line;
  std::size_t line_no = 0;
  if (!next_content_line(in, line, line_no)) throw ValidationError("events file is empty");
  EventSequence events;
  {
    const json header = parse_line(line, line_no);
    check_header(header, "rootsrc.events", line_no);
    with_line(line_no, [&] {
      events.horizon = header.at("T").get<double>();
      events.num_sources = header.at("S").get<std::size_t>();
      events.vocab_size = header.at("V").get<std::size_t>();
    });
  }
  while (next_content_line(in, line, line_no)) {
    const json row = parse_line(line, line_no);
    with_line(line_no, [&] {
      const auto idx = row.at("i").get<std::size_t>();
      if (idx != events.size() + 1) {
        throw ValidationError("line " + std::to_string(line_no) + ": expected event index " +
                              std::to_string(events.size() + 1));
      }
      std::vector<TokenCount> tokens;
      for (const auto& [key, count] : row.at("x").items()) {
        std::uint32_t v = 0;
        const auto [ptr, ec] = std::from_chars(key.data(), key.data() + key.size(), v);
        if (ec != std::errc() || ptr != key.data() + key.size()) {
          throw ValidationError("line " + std::to_string(line_no) + ": bad token index '" + key + "'");
        }
        tokens.push_back({v, count.get<std::uint32_t>()});
      }
      events.events.push_back(
          Event::make(row.at("t").get<double>(), row.at("s").get<std::size_t>(), std::move(tokens)));
    });
  }
  events.validate();
  return events;
}

void write_truth(std::ostream& out, const GroundTruth& truth) {
  out << json{{"schema", "rootsrc.truth"}, {"version", kSchemaVersion}}.dump() << '\n';
  for (std::size_t i = 0; i < truth.roots.size(); ++i) {
    json line = {{"i", i + 1}, {"parent", truth.branching.parent.at(i)}, {"root", truth.roots[i]}};
    out << line.dump() << '\n';
  }
}

GroundTruth read_truth(std::istream& in) {
  std::string line;
  std::size_t line_no = 0;
  if (!next_content_line(in, line, line_no)) throw ValidationError("truth file is empty");
  check_header(parse_line(line, line_no), "rootsrc.truth", line_no);
  GroundTruth truth;
  while (next_content_line(in, line, line_no)) {
    const json row = parse_line(line, line_no);
    with_line(line_no, [&] {
      if (row.at("i").get<std::size_t>() != truth.roots.size() + 1) {
        throw ValidationError("line " + std::to_string(line_no) + ": event indices must be consecutive");
      }
      truth.branching.parent.push_back(row.at("parent").get<std::size_t>());
      truth.roots.push_back(row.at("root").get<std::size_t>());
    });
  }
  truth.branching.validate();
  return truth;
}

void write_params(std::ostream& out, const ModelParams& params) {
  if (!params.base_shape.is_constant_one || !params.mark_impact.is_constant_one) {
    throw ValidationError("only constant base shape and mark impact can be serialized");
  }
  const std::size_t n_sources = params.num_sources();
  json alpha = json::array();
  json theta = json::array();
  for (std::size_t s = 0; s < n_sources; ++s) {
    const auto a = params.alpha.row(s);
    const auto th = params.theta.row(s);
    alpha.push_back(std::vector<double>(a.begin(), a.end()));
    theta.push_back(std::vector<double>(th.begin(), th.end()));
  }
  json doc = {{"schema", "rootsrc.params"},
              {"version", kSchemaVersion},
              {"S", n_sources},
              {"V", params.vocab_size()},
              {"rho", params.rho},
              {"A", std::move(alpha)},
              {"theta", std::move(theta)},
              {"gamma", params.gamma},
              {"kernel", {{"kind", "exponential"}, {"nu", params.kernel.bandwidth()}}},
              {"base_shape", "constant"},
              {"mark_impact", "constant"}};
  out << doc.dump() << '\n';
}

ModelParams read_params(std::istream& in) {
  json doc;
  try {
    in >> doc;
  } catch (const json::exception& e) {
    throw ValidationError(std::string("malformed parameter JSON: ") + e.what());
  }
  check_header(doc, "rootsrc.params");
  ModelParams params;
  with_line(1, [&] {
    const auto n_sources = doc.at("S").get<std::size_t>();
    const auto vocab = doc.at("V").get<std::size_t>();
    params.rho = doc.at("rho").get<std::vector<double>>();
    const auto alpha = doc.at("A").get<std::vector<std::vector<double>>>();
    const auto theta = doc.at("theta").get<std::vector<std::vector<double>>>();
    if (params.rho.size() != n_sources || alpha.size() != n_sources || theta.size() != n_sources) {
      throw ValidationError("parameter arrays do not match S");
    }
    params.alpha = Matrix(n_sources, n_sources);
    params.theta = Matrix(n_sources, vocab);
    for (std::size_t s = 0; s < n_sources; ++s) {
      if (alpha[s].size() != n_sources || theta[s].size() != vocab) {
        throw ValidationError("parameter row " + std::to_string(s) + " has the wrong length");
      }
      std::copy(alpha[s].begin(), alpha[s].end(), params.alpha.row(s).begin());
      std::copy(theta[s].begin(), theta[s].end(), params.theta.row(s).begin());
    }
    params.gamma = doc.at("gamma").get<double>();
    const auto& kernel = doc.at("kernel");
    if (kernel.at("kind") != "exponential") throw ValidationError("unsupported kernel kind");
    params.kernel = ExponentialKernel(kernel.at("nu").get<double>());
    if (doc.value("base_shape", "constant") != "constant" ||
        doc.value("mark_impact", "constant") != "constant") {
      throw ValidationError("only constant base shape and mark impact are supported in files");
    }
  });
  params.validate();
  return params;
}

void write_eta(std::ostream& out, const VariationalState& eta) {
  out << json{{"schema", "rootsrc.eta"}, {"version", kSchemaVersion}, {"n", eta.num_events()}}.dump()
      << '\n';
  for (std::size_t i = 0; i < eta.num_events(); ++i) {
    const auto ids = eta.parents_of(i);
    const auto p = eta.probs_of(i);
    json line = {{"i", i + 1},
                 {"parents", std::vector<std::uint32_t>(ids.begin(), ids.end())},
                 {"probs", std::vector<double>(p.begin(), p.end())}};
    out << line.dump() << '\n';
  }
}

VariationalState read_eta(std::istream& in) {
  std::string line;
  std::size_t line_no = 0;
  if (!next_content_line(in, line, line_no)) throw ValidationError("eta file is empty");
  const json header = parse_line(line, line_no);
  check_header(header, "rootsrc.eta", line_no);
  VariationalState eta;
  while (next_content_line(in, line, line_no)) {
    const json row = parse_line(line, line_no);
    with_line(line_no, [&] {
      if (row.at("i").get<std::size_t>() != eta.num_events() + 1) {
        throw ValidationError("line " + std::to_string(line_no) + ": event indices must be consecutive");
      }
      const auto ids = row.at("parents").get<std::vector<std::uint32_t>>();
      const auto p = row.at("probs").get<std::vector<double>>();
      if (ids.size() != p.size()) throw ValidationError("line " + std::to_string(line_no) + ": parents/probs length mismatch");
      eta.append(ids, p);
    });
  }
  if (header.contains("n") && header["n"].get<std::size_t>() != eta.num_events()) {
    throw ValidationError("eta header announces a different number of events");
  }
  return eta;
}

void write_root_probs(std::ostream& out, const RootProbMatrix& r) {
  out << "# schema=rootsrc.rootprob version=" << kSchemaVersion << " mode=" << to_string(r.mode)
      << '\n';
  out << "event_index";
  for (std::size_t s = 0; s < r.num_sources(); ++s) out << ",r_" << s;
  out << ",argmax_source\n";
  for (std::size_t i = 0; i < r.num_events(); ++i) {
    out << i + 1;
    for (double v : r.r.row(i)) out << ',' << format_double(v);
    out << ',' << r.argmax(i) << '\n';
  }
}

RootProbMatrix read_root_probs(std::istream& in) {
  std::string line;
  std::size_t line_no = 0;
  if (!next_content_line(in, line, line_no) || line.rfind("# schema=rootsrc.rootprob", 0) != 0) {
    throw ValidationError("root-probability CSV must start with its schema line");
  }
  RootProbMatrix out;
  {
    std::istringstream meta(line.substr(1));
    std::string field;
    bool version_ok = false;
    while (meta >> field) {
      if (field == "version=" + std::to_string(kSchemaVersion)) version_ok = true;
      if (field.rfind("mode=", 0) == 0) out.mode = parse_root_prob_mode(field.substr(5));
    }
    if (!version_ok) throw ValidationError("root-probability CSV schema version mismatch");
  }
  if (!next_content_line(in, line, line_no)) throw ValidationError("root-probability CSV lacks a header");
  const auto header = split_csv(line);
  if (header.size() < 3 || header.front() != "event_index" || header.back() != "argmax_source") {
    throw ValidationError("line " + std::to_string(line_no) + ": unexpected CSV header");
  }
  const std::size_t n_sources = header.size() - 2;
  std::vector<double> values;
  std::size_t rows = 0;
  while (next_content_line(in, line, line_no)) {
    const auto fields = split_csv(line);
    if (fields.size() != header.size()) {
      throw ValidationError("line " + std::to_string(line_no) + ": expected " +
                            std::to_string(header.size()) + " fields");
    }
    if (parse_csv_double(fields[0], line_no) != static_cast<double>(rows + 1)) {
      throw ValidationError("line " + std::to_string(line_no) + ": event indices must be consecutive");
    }
    for (std::size_t s = 0; s < n_sources; ++s) values.push_back(parse_csv_double(fields[1 + s], line_no));
    ++rows;
  }
  out.r = Matrix(rows, n_sources);
  std::copy(values.begin(), values.end(), out.r.flat().begin());
  return out;
}

void write_elbo_trace(std::ostream& out, std::span<const double> trace) {
  out << "iteration,elbo\n";
  for (std::size_t k = 0; k < trace.size(); ++k) out << k << ',' << format_double(trace[k]) << '\n';
}

void write_eval_report(std::ostream& out, const EvalReport& report) {
  json top_k = json::object();
  for (const auto& [k, v] : report.top_k) top_k[std::to_string(k)] = v;
  json doc = {{"schema", "rootsrc.eval"},
              {"version", kSchemaVersion},
              {"n_events", report.n_events},
              {"accuracy", report.accuracy},
              {"log_prob", report.log_prob},
              {"top_k", std::move(top_k)},
              {"power", report.power}};
  if (report.rse_alpha) doc["rse_A"] = *report.rse_alpha;
  if (!report.rse_theta.empty()) doc["rse_theta"] = report.rse_theta;
  out << doc.dump(2) << '\n';
}

void print_eval_table(std::ostream& out, const EvalReport& report) {
  out << std::fixed << std::setprecision(4);
  out << "events            " << report.n_events << '\n';
  out << "accuracy          " << report.accuracy << '\n';
  out << "log-prob          " << report.log_prob << '\n';
  for (const auto& [k, v] : report.top_k) out << "top-" << std::left << std::setw(14) << k << v << '\n';
  if (report.rse_alpha) out << "RSE(A)            " << *report.rse_alpha << '\n';
  for (std::size_t s = 0; s < report.rse_theta.size(); ++s) {
    out << "RSE(theta_" << s << ")" << std::string(s < 10 ? 6 : 5, ' ') << report.rse_theta[s] << '\n';
  }
  out << "power            ";
  for (double p : report.power) out << ' ' << p;
  out << '\n';
  out.unsetf(std::ios::floatfield);
}

std::unique_ptr<std::istream> open_input(const std::string& path) {
  if (path == "-") return std::make_unique<std::istream>(std::cin.rdbuf());
  auto file = std::make_unique<std::ifstream>(path);
  if (!*file) throw ValidationError("cannot open '" + path + "' for reading");
  return file;
}

std::unique_ptr<std::ostream> open_output(const std::string& path) {
  if (path == "-") return std::make_unique<std::ostream>(std::cout.rdbuf());
  auto file = std::make_unique<std::ofstream>(path);
  if (!*file) throw ValidationError("cannot open '" + path + "' for writing");
  return file;
}

}  // namespace rootsrc
