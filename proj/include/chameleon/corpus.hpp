#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "chameleon/markers.hpp"

namespace chameleon {

enum class Gender : std::uint8_t { Male, Female, Unknown };

char gender_code(Gender gender);  // 'm', 'f', '?'
Gender gender_from_code(std::string_view code);

struct Movie {
  std::string id;
  std::string title;
  std::optional<int> year;
  std::vector<std::string> genres;
};

struct Character {
  std::string id;
  std::string name;
  std::int32_t movie = -1;
  Gender gender = Gender::Unknown;
  std::optional<int> credit_position;  // >= 1 when present
};

struct Utterance {
  std::string id;
  std::int32_t speaker = -1;  // character index
  std::int32_t index_in_conversation = 0;
  std::string text;
  std::vector<std::string> tokens;  // derived at build time, lowercase
};

struct Conversation {
  std::string id;
  std::int32_t movie = -1;
  std::array<std::int32_t, 2> participants{-1, -1};  // character indices
  std::vector<Utterance> utterances;
};

enum class SourceFormat { Cornell, Jsonl, Normalized };

std::string_view format_name(SourceFormat format);
std::optional<SourceFormat> format_from_name(std::string_view name);

struct Provenance {
  std::string source;
  SourceFormat format = SourceFormat::Normalized;
  /// Set at parse time. Kept in memory only; serialized outputs stay
  /// byte-stable across reruns, so it is never written to disk.
  std::string parsed_at;
};

struct ParseReport {
  std::size_t total_lines = 0;
  std::size_t malformed_lines = 0;
  std::size_t encoding_fallback_lines = 0;  // invalid UTF-8, re-read as Latin-1
  std::size_t duplicate_conversations = 0;
  std::vector<std::string> warnings;  // capped at ParseOptions::max_warnings
};

struct ParseOptions {
  /// Abort with FieldCountMismatch when more than this fraction of data
  /// lines is malformed.
  double malformed_tolerance = 0.01;
  std::size_t max_warnings = 50;
};

/// Immutable, cross-reference-validated dialog corpus. Safe to share across
/// threads once built.
class Corpus {
public:
  std::span<const Movie> movies() const { return movies_; }
  std::span<const Character> characters() const { return characters_; }
  std::span<const Conversation> conversations() const { return conversations_; }

  const Movie& movie(std::int32_t index) const { return movies_[static_cast<std::size_t>(index)]; }
  const Character& character(std::int32_t index) const {
    return characters_[static_cast<std::size_t>(index)];
  }
  const Conversation& conversation(std::int32_t index) const {
    return conversations_[static_cast<std::size_t>(index)];
  }

  std::optional<std::int32_t> find_movie(std::string_view id) const;
  std::optional<std::int32_t> find_character(std::string_view id) const;

  std::size_t utterance_count() const { return utterance_count_; }

  const Provenance& provenance() const { return provenance_; }
  const ParseReport& report() const { return report_; }

  class Builder;

private:
  Corpus() = default;

  std::vector<Movie> movies_;
  std::vector<Character> characters_;
  std::vector<Conversation> conversations_;
  std::unordered_map<std::string, std::int32_t> movie_index_;
  std::unordered_map<std::string, std::int32_t> character_index_;
  std::size_t utterance_count_ = 0;
  Provenance provenance_;
  ParseReport report_;
};

/// Accumulates entities by id, then resolves references, validates
/// invariants, tokenizes and freezes. Duplicate conversations (same movie,
/// same utterance-text sequence) are dropped with a warning.
class Corpus::Builder {
public:
  explicit Builder(Provenance provenance);
  ~Builder();
  Builder(Builder&&) noexcept;
  Builder& operator=(Builder&&) noexcept;

  void add_movie(std::string id, std::string title, std::optional<int> year,
                 std::vector<std::string> genres);
  void add_character(std::string id, std::string name, std::string movie_id, Gender gender,
                     std::optional<int> credit_position);

  struct Line {
    std::string id;
    std::string speaker_id;
    std::string text;
  };
  void add_conversation(std::string id, std::string movie_id,
                        std::array<std::string, 2> participant_ids, std::vector<Line> lines);

  ParseReport& report();
  void warn(const std::string& message, std::size_t max_warnings);

  Corpus build(bool deduplicate = true);

private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

/// Parses a raw corpus. `source` is a directory for the Cornell format and a
/// file for the jsonl / normalized formats.
Corpus parse_corpus(const std::filesystem::path& source, SourceFormat format,
                    const ParseOptions& options = {});

/// Normalized intermediate format: JSON-lines, one record per entity with a
/// `kind` field. Loading then saving reproduces the file byte for byte.
void save_normalized(const Corpus& corpus, std::ostream& out);
void save_normalized(const Corpus& corpus, const std::filesystem::path& file);
Corpus load_normalized(const std::filesystem::path& file, const ParseOptions& options = {});

/// An (initiating utterance, reply) pair inside one conversation.
/// gap() == 1 for standard adjacent exchanges.
struct Exchange {
  std::int32_t conversation = -1;
  std::int32_t trigger_pos = -1;
  std::int32_t reply_pos = -1;

  std::int32_t gap() const { return reply_pos - trigger_pos; }
};

/// All exchanges of one ordered (initiator, respondent) pair, pooled across
/// that pair's conversations. initiator == respondent only for
/// self-coordination pairs.
struct PairExchanges {
  std::int32_t initiator = -1;
  std::int32_t respondent = -1;
  std::vector<Exchange> exchanges;
};

struct ExchangeIndex {
  std::vector<PairExchanges> pairs;  // canonical order: by (initiator id, respondent id)
  std::size_t total_exchanges = 0;   // across retained pairs
  std::size_t removed_pairs = 0;     // dropped below min_exchanges
  std::int32_t gap = 1;
};

/// Adjacent distinct-speaker exchanges per ordered character pair.
/// Consecutive same-speaker utterances are never merged; such a boundary
/// simply yields no exchange. Ordered pairs with fewer than min_exchanges
/// exchanges in total are removed.
ExchangeIndex extract_exchanges(const Corpus& corpus, int min_exchanges = 5);

/// Groups a flat exchange list by the ordered (trigger speaker, reply
/// speaker) pair, drops pairs below min_exchanges (counting them in
/// removed_pairs), and sorts pairs canonically by character id. The other
/// extractors (adjacent, skip-distance, self) all funnel through this.
ExchangeIndex group_exchanges(const Corpus& corpus, std::vector<Exchange> exchanges,
                              int min_exchanges, std::int32_t gap);

inline bool exhibits(const Utterance& utterance, MarkerFamily family, const Lexicon& lexicon) {
  return exhibits(std::span<const std::string>(utterance.tokens), family, lexicon);
}

}  // namespace chameleon
