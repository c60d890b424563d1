#include "rootsrc/ingest.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <istream>
#include <map>
#include <numeric>
#include <ostream>
#include <unordered_set>

#include "json.hpp"
#include "rootsrc/error.hpp"

namespace rootsrc {

std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> out;
  std::string current;
  const auto flush = [&] {
    const auto b = current.find_first_not_of('\'');
    const auto e = current.find_last_not_of('\'');
    if (b != std::string::npos) out.push_back(current.substr(b, e - b + 1));
    current.clear();
  };
  for (char ch : text) {
    const auto c = static_cast<unsigned char>(ch);
    if (std::isalnum(c) || c == '\'') {
      current.push_back(static_cast<char>(std::tolower(c)));
    } else if (!current.empty()) {
      flush();
    }
  }
  if (!current.empty()) flush();
  return out;
}

IngestResult ingest(std::span<const RawComment> comments, const IngestOptions& options) {
  if (comments.empty()) throw ValidationError("no comments to ingest");
  if (options.jitter && !(*options.jitter > 0.0)) throw ValidationError("jitter must be positive");

  std::map<std::string, std::size_t> per_author;
  for (std::size_t k = 0; k < comments.size(); ++k) {
    if (comments[k].author.empty()) {
      throw ValidationError("comment " + std::to_string(k + 1) + " has an empty author");
    }
    if (!std::isfinite(comments[k].t)) {
      throw ValidationError("comment " + std::to_string(k + 1) + " has a non-finite timestamp");
    }
    ++per_author[comments[k].author];
  }

  std::vector<std::size_t> kept;
  for (std::size_t k = 0; k < comments.size(); ++k) {
    if (per_author[comments[k].author] >= options.min_author_count) kept.push_back(k);
  }
  if (kept.empty()) throw ValidationError("no comments left after author filtering");
  std::stable_sort(kept.begin(), kept.end(),
                   [&](std::size_t a, std::size_t b) { return comments[a].t < comments[b].t; });

  const std::unordered_set<std::string> stop(options.stop_words.begin(), options.stop_words.end());
  std::vector<std::vector<std::pair<std::string, std::uint32_t>>> bags;
  bags.reserve(kept.size());
  std::map<std::string, std::size_t> totals;
  for (std::size_t k : kept) {
    std::vector<std::pair<std::string, std::uint32_t>> bag;
    if (comments[k].tokens) {
      bag = *comments[k].tokens;
    } else {
      for (auto& tok : tokenize(comments[k].text)) bag.emplace_back(std::move(tok), 1);
    }
    std::erase_if(bag, [&](const auto& p) { return p.second == 0 || stop.contains(p.first); });
    for (const auto& [tok, count] : bag) totals[tok] += count;
    bags.push_back(std::move(bag));
  }

  IngestResult result;
  result.vocabulary.min_count = options.min_count;
  for (const auto& [tok, total] : totals) {
    if (total < options.min_count) continue;
    result.vocabulary.index.emplace(tok, static_cast<std::uint32_t>(result.vocabulary.tokens.size()));
    result.vocabulary.tokens.push_back(tok);
  }

  std::unordered_map<std::string, std::size_t> source_index;
  const double origin = comments[kept.front()].t;
  EventSequence& events = result.events;
  for (std::size_t pos = 0; pos < kept.size(); ++pos) {
    const RawComment& c = comments[kept[pos]];
    auto [it, inserted] = source_index.emplace(c.author, result.sources.size());
    if (inserted) result.sources.push_back(c.author);
    std::vector<TokenCount> tokens;
    for (const auto& [tok, count] : bags[pos]) {
      if (auto v = result.vocabulary.index.find(tok); v != result.vocabulary.index.end()) {
        tokens.push_back({v->second, count});
      }
    }
    double t = c.t - origin;
    if (options.jitter) t += static_cast<double>(pos) * *options.jitter;
    events.events.push_back(Event::make(t, it->second, std::move(tokens)));
  }
  for (std::size_t i = 1; i < events.size(); ++i) {
    if (!(events[i - 1].t < events[i].t)) {
      throw ValidationError("comments " + std::to_string(i) + " and " + std::to_string(i + 1) +
                            " share a timestamp; rerun with jitter to break ties");
    }
  }
  events.num_sources = result.sources.size();
  events.vocab_size = result.vocabulary.size();
  events.horizon = options.horizon ? *options.horizon : events.events.back().t;
  if (events.vocab_size == 0) throw ValidationError("vocabulary is empty after filtering");
  events.validate();
  return result;
}

std::vector<RawComment> read_raw_comments(std::istream& in) {
  using nlohmann::json;
  std::vector<RawComment> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const json row = json::parse(line);
      RawComment c;
      c.t = row.at("t").get<double>();
      c.author = row.at("author").is_string() ? row.at("author").get<std::string>()
                                              : row.at("author").dump();
      if (row.contains("tokens")) {
        std::vector<std::pair<std::string, std::uint32_t>> tokens;
        for (const auto& [tok, count] : row.at("tokens").items()) {
          tokens.emplace_back(tok, count.get<std::uint32_t>());
        }
        c.tokens = std::move(tokens);
      } else {
        c.text = row.value("text", "");
      }
      out.push_back(std::move(c));
    } catch (const json::exception& e) {
      throw ValidationError("line " + std::to_string(line_no) + ": unparseable comment (" +
                            e.what() + ")");
    }
  }
  return out;
}

void write_vocabulary(std::ostream& out, const Vocabulary& vocab) {
  for (std::size_t v = 0; v < vocab.size(); ++v) out << v << '\t' << vocab.tokens[v] << '\n';
}

void write_source_map(std::ostream& out, std::span<const std::string> sources) {
  for (std::size_t s = 0; s < sources.size(); ++s) out << s << '\t' << sources[s] << '\n';
}

}  // namespace rootsrc
