#include "chameleon/markers.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>

#include "chameleon/error.hpp"
#include "chameleon/rng.hpp"

namespace chameleon {

namespace {

constexpr std::array<std::string_view, kFamilyCount> kFamilyNames = {
    "articles",           "auxiliary_verbs", "conjunctions",
    "adverbs",            "impersonal_pronouns", "negations",
    "personal_pronouns",  "prepositions",    "quantifiers",
};

bool is_ascii_letter(char c) { return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z'); }

char to_lower_ascii(char c) { return (c >= 'A' && c <= 'Z') ? static_cast<char>(c - 'A' + 'a') : c; }

}  // namespace

const std::array<MarkerFamily, kFamilyCount>& all_families() {
  static const std::array<MarkerFamily, kFamilyCount> families = {
      MarkerFamily::Articles,           MarkerFamily::AuxiliaryVerbs,
      MarkerFamily::Conjunctions,       MarkerFamily::Adverbs,
      MarkerFamily::ImpersonalPronouns, MarkerFamily::Negations,
      MarkerFamily::PersonalPronouns,   MarkerFamily::Prepositions,
      MarkerFamily::Quantifiers,
  };
  return families;
}

std::string_view family_name(MarkerFamily family) {
  return kFamilyNames[static_cast<std::size_t>(family)];
}

std::optional<MarkerFamily> family_from_name(std::string_view name) {
  for (std::size_t i = 0; i < kFamilyCount; ++i) {
    if (kFamilyNames[i] == name) return static_cast<MarkerFamily>(i);
  }
  return std::nullopt;
}

std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> tokens;
  std::string current;
  for (std::size_t i = 0; i < text.size(); ++i) {
    char c = text[i];
    if (is_ascii_letter(c)) {
      current.push_back(to_lower_ascii(c));
    } else if (c == '\'' && !current.empty() && i + 1 < text.size() && is_ascii_letter(text[i + 1])) {
      current.push_back('\'');
    } else {
      if (!current.empty()) tokens.push_back(std::move(current));
      current.clear();
    }
  }
  if (!current.empty()) tokens.push_back(std::move(current));
  return tokens;
}

Lexicon Lexicon::load(const std::filesystem::path& file, const LexiconOptions& options) {
  std::ifstream in(file, std::ios::binary);
  if (!in) fail(ErrorCode::MissingFile, "cannot open lexicon file " + file.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  const std::string bytes = buffer.str();

  std::vector<std::pair<MarkerFamily, std::string>> entries;
  std::size_t line_number = 0;
  std::istringstream lines(bytes);
  std::string line;
  while (std::getline(lines, line)) {
    ++line_number;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    auto tab = line.find('\t');
    if (tab == std::string::npos || tab == 0 || tab + 1 >= line.size()) {
      fail(ErrorCode::SyntaxError,
           file.string() + ":" + std::to_string(line_number) + ": expected `family<TAB>lexeme`");
    }
    std::string family_token = line.substr(0, tab);
    std::string lexeme = line.substr(tab + 1);
    auto family = family_from_name(family_token);
    if (!family) {
      fail(ErrorCode::UnknownFamilyName,
           file.string() + ":" + std::to_string(line_number) + ": `" + family_token + "`");
    }
    entries.emplace_back(*family, std::move(lexeme));
  }

  Lexicon lexicon = from_entries(entries, file.string(), options);
  lexicon.hash_ = rng::fnv1a64(bytes);
  return lexicon;
}

Lexicon Lexicon::from_entries(const std::vector<std::pair<MarkerFamily, std::string>>& entries,
                              std::string provenance, const LexiconOptions& options) {
  Lexicon lexicon;
  lexicon.provenance_ = std::move(provenance);

  std::string hashed;
  for (const auto& [family, lexeme] : entries) {
    if (lexeme.empty()) fail(ErrorCode::SyntaxError, "empty lexeme in family " + std::string(family_name(family)));
    std::string lowered;
    lowered.reserve(lexeme.size());
    for (char c : lexeme) lowered.push_back(to_lower_ascii(c));
    std::uint16_t bit = static_cast<std::uint16_t>(1u << static_cast<unsigned>(family));
    auto [it, inserted] = lexicon.masks_.emplace(lowered, bit);
    if (!inserted) {
      if (it->second & bit) continue;  // duplicate (family, lexeme) line: set semantics
      it->second = static_cast<std::uint16_t>(it->second | bit);
    }
    ++lexicon.sizes_[static_cast<std::size_t>(family)];
    hashed += family_name(family);
    hashed += '\t';
    hashed += lowered;
    hashed += '\n';
  }
  lexicon.hash_ = rng::fnv1a64(hashed);

  if (!options.allow_empty_family) {
    std::string empty;
    for (MarkerFamily family : all_families()) {
      if (lexicon.family_size(family) == 0) {
        if (!empty.empty()) empty += ", ";
        empty += family_name(family);
      }
    }
    if (!empty.empty()) {
      fail(ErrorCode::EmptyFamily, "families without lexemes: " + empty +
                                       " (pass --allow-empty-family to override)");
    }
  }
  return lexicon;
}

bool Lexicon::contains(MarkerFamily family, std::string_view lexeme) const {
  return (family_mask(lexeme) >> static_cast<unsigned>(family)) & 1u;
}

std::uint16_t Lexicon::family_mask(std::string_view token) const {
  auto it = masks_.find(std::string(token));
  return it == masks_.end() ? 0 : it->second;
}

std::uint16_t Lexicon::utterance_mask(std::span<const std::string> tokens) const {
  std::uint16_t mask = 0;
  for (const std::string& token : tokens) mask |= family_mask(token);
  return mask;
}

std::size_t Lexicon::total_lexemes() const {
  std::size_t total = 0;
  for (std::size_t size : sizes_) total += size;
  return total;
}

std::string Lexicon::content_hash_hex() const {
  static const char* digits = "0123456789abcdef";
  std::string out(16, '0');
  std::uint64_t h = hash_;
  for (int i = 15; i >= 0; --i) {
    out[static_cast<std::size_t>(i)] = digits[h & 0xf];
    h >>= 4;
  }
  return out;
}

bool exhibits(std::span<const std::string> tokens, MarkerFamily family, const Lexicon& lexicon) {
  for (const std::string& token : tokens) {
    if (lexicon.contains(family, token)) return true;
  }
  return false;
}

}  // namespace chameleon
