#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "rootsrc/model.hpp"

namespace rootsrc {

// One raw comment. When `tokens` is set the text is ignored and the given
// (token, count) pairs are used verbatim.
struct RawComment {
  double t = 0.0;
  std::string author;
  std::string text;
  std::optional<std::vector<std::pair<std::string, std::uint32_t>>> tokens;
};

struct Vocabulary {
  std::vector<std::string> tokens;  // index -> token
  std::unordered_map<std::string, std::uint32_t> index;
  std::size_t min_count = 0;

  [[nodiscard]] std::size_t size() const { return tokens.size(); }
};

struct IngestOptions {
  std::size_t min_count = 2;         // drop tokens seen fewer times overall
  std::size_t min_author_count = 5;  // drop authors with fewer comments
  std::vector<std::string> stop_words;
  std::optional<double> horizon;  // defaults to the last (shifted) timestamp
  std::optional<double> jitter;   // add i * jitter to the i-th event to break ties
};

struct IngestResult {
  EventSequence events;
  Vocabulary vocabulary;
  std::vector<std::string> sources;  // source index -> author
};

// Lowercases ASCII and splits on anything that is not a letter, digit or
// apostrophe; leading and trailing apostrophes are stripped.
[[nodiscard]] std::vector<std::string> tokenize(std::string_view text);

// Filters authors, builds the vocabulary (lexicographic token order), indexes
// sources by first appearance in time, shifts time so the first comment is at
// 0, and rejects exact timestamp ties unless jitter is requested.
[[nodiscard]] IngestResult ingest(std::span<const RawComment> comments, const IngestOptions& options);

// JSONL, one object per line: {"t":..,"author":"..","text":".."} or
// {"t":..,"author":"..","tokens":{"word":count,..}}. Errors name the line.
[[nodiscard]] std::vector<RawComment> read_raw_comments(std::istream& in);

void write_vocabulary(std::ostream& out, const Vocabulary& vocab);
void write_source_map(std::ostream& out, std::span<const std::string> sources);

}  // namespace rootsrc
