#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

namespace chameleon {

/// The nine function-word trigger families, in canonical order.
enum class MarkerFamily : std::uint8_t {
  Articles = 0,
  AuxiliaryVerbs,
  Conjunctions,
  Adverbs,
  ImpersonalPronouns,
  Negations,
  PersonalPronouns,
  Prepositions,
  Quantifiers,
};

inline constexpr std::size_t kFamilyCount = 9;

const std::array<MarkerFamily, kFamilyCount>& all_families();

/// Stable lowercase identifier ("articles", "auxiliary_verbs", ...).
std::string_view family_name(MarkerFamily family);
std::optional<MarkerFamily> family_from_name(std::string_view name);

/// Lowercase word tokens: maximal runs of ASCII letters, with apostrophes
/// kept when they sit between two letters ("o'clock"). Digits, punctuation
/// and non-ASCII bytes separate tokens.
std::vector<std::string> tokenize(std::string_view text);

struct LexiconOptions {
  bool allow_empty_family = false;
};

/// Immutable mapping from each family to its lexeme set. Lexemes are single
/// lowercase tokens; a lexeme may belong to several families when the source
/// lists overlap.
class Lexicon {
public:
  /// Loads a tab-separated file: `family<TAB>lexeme`, one per line, `#`
  /// comments and blank lines ignored. All nine families must end up
  /// non-empty unless options.allow_empty_family is set.
  static Lexicon load(const std::filesystem::path& file, const LexiconOptions& options = {});

  static Lexicon from_entries(const std::vector<std::pair<MarkerFamily, std::string>>& entries,
                              std::string provenance, const LexiconOptions& options = {});

  bool contains(MarkerFamily family, std::string_view lexeme) const;

  /// Bit i set iff family i contains the token.
  std::uint16_t family_mask(std::string_view token) const;

  /// OR of family_mask over the tokens.
  std::uint16_t utterance_mask(std::span<const std::string> tokens) const;

  std::size_t family_size(MarkerFamily family) const {
    return sizes_[static_cast<std::size_t>(family)];
  }

  /// Sum of family sizes; a shared lexeme counts once per family listing it.
  std::size_t total_lexemes() const;

  std::size_t distinct_lexemes() const { return masks_.size(); }

  const std::string& provenance() const { return provenance_; }

  /// FNV-1a over the source bytes (file load) or the entry list; embedded in
  /// reports so results can be traced to the exact word lists used.
  std::uint64_t content_hash() const { return hash_; }
  std::string content_hash_hex() const;

private:
  Lexicon() = default;

  std::unordered_map<std::string, std::uint16_t> masks_;
  std::array<std::size_t, kFamilyCount> sizes_{};
  std::string provenance_;
  std::uint64_t hash_ = 0;
};

/// 1 iff the token list contains at least one lexeme of the family.
/// Presence-based: token multiplicity never matters.
bool exhibits(std::span<const std::string> tokens, MarkerFamily family, const Lexicon& lexicon);

}  // namespace chameleon
