#include "chameleon/corpus.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <fstream>
#include <map>
#include <sstream>
#include <unordered_set>

#include <json.hpp>

#include "chameleon/error.hpp"

namespace chameleon {

namespace {

using nlohmann::json;

std::string now_iso8601() {
  auto now = std::chrono::system_clock::now();
  std::time_t t = std::chrono::system_clock::to_time_t(now);
  char buf[32];
  std::tm tm_utc{};
  gmtime_r(&t, &tm_utc);
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm_utc);
  return buf;
}

bool valid_utf8(std::string_view bytes) {
  std::size_t i = 0;
  while (i < bytes.size()) {
    unsigned char c = static_cast<unsigned char>(bytes[i]);
    std::size_t len;
    if (c < 0x80) {
      len = 1;
    } else if ((c & 0xe0) == 0xc0) {
      len = 2;
      if (c < 0xc2) return false;  // overlong
    } else if ((c & 0xf0) == 0xe0) {
      len = 3;
    } else if ((c & 0xf8) == 0xf0) {
      len = 4;
      if (c > 0xf4) return false;
    } else {
      return false;
    }
    if (i + len > bytes.size()) return false;
    for (std::size_t k = 1; k < len; ++k) {
      if ((static_cast<unsigned char>(bytes[i + k]) & 0xc0) != 0x80) return false;
    }
    i += len;
  }
  return true;
}

std::string latin1_to_utf8(std::string_view bytes) {
  std::string out;
  out.reserve(bytes.size());
  for (unsigned char c : bytes) {
    if (c < 0x80) {
      out.push_back(static_cast<char>(c));
    } else {
      out.push_back(static_cast<char>(0xc0 | (c >> 6)));
      out.push_back(static_cast<char>(0x80 | (c & 0x3f)));
    }
  }
  return out;
}

std::optional<int> parse_leading_int(std::string_view text) {
  int value = 0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || ptr == text.data()) return std::nullopt;
  return value;
}

/// Items of a bracketed quoted list: ['L194', 'L195'] or ["a", "b"].
std::vector<std::string> parse_bracketed_list(std::string_view text) {
  std::vector<std::string> items;
  std::size_t i = 0;
  while (i < text.size()) {
    char c = text[i];
    if (c == '\'' || c == '"') {
      std::size_t close = text.find(c, i + 1);
      if (close == std::string_view::npos) break;
      items.emplace_back(text.substr(i + 1, close - i - 1));
      i = close + 1;
    } else {
      ++i;
    }
  }
  return items;
}

}  // namespace

char gender_code(Gender gender) {
  switch (gender) {
    case Gender::Male: return 'm';
    case Gender::Female: return 'f';
    default: return '?';
  }
}

Gender gender_from_code(std::string_view code) {
  if (code.size() == 1) {
    char c = code[0];
    if (c == 'm' || c == 'M') return Gender::Male;
    if (c == 'f' || c == 'F') return Gender::Female;
  }
  return Gender::Unknown;
}

std::string_view format_name(SourceFormat format) {
  switch (format) {
    case SourceFormat::Cornell: return "cornell";
    case SourceFormat::Jsonl: return "jsonl";
    default: return "norm";
  }
}

std::optional<SourceFormat> format_from_name(std::string_view name) {
  if (name == "cornell") return SourceFormat::Cornell;
  if (name == "jsonl") return SourceFormat::Jsonl;
  if (name == "norm" || name == "normalized") return SourceFormat::Normalized;
  return std::nullopt;
}

std::optional<std::int32_t> Corpus::find_movie(std::string_view id) const {
  auto it = movie_index_.find(std::string(id));
  if (it == movie_index_.end()) return std::nullopt;
  return it->second;
}

std::optional<std::int32_t> Corpus::find_character(std::string_view id) const {
  auto it = character_index_.find(std::string(id));
  if (it == character_index_.end()) return std::nullopt;
  return it->second;
}

// ---------------------------------------------------------------------------
// Builder
// ---------------------------------------------------------------------------

struct Corpus::Builder::Impl {
  Provenance provenance;
  ParseReport report;

  struct PendingCharacter {
    std::string id, name, movie_id;
    Gender gender;
    std::optional<int> credit_position;
  };
  struct PendingConversation {
    std::string id, movie_id;
    std::array<std::string, 2> participant_ids;
    std::vector<Line> lines;
  };

  std::vector<Movie> movies;
  std::vector<PendingCharacter> characters;
  std::vector<PendingConversation> conversations;
  std::unordered_set<std::string> movie_ids, character_ids;
};

Corpus::Builder::Builder(Provenance provenance) : impl_(std::make_unique<Impl>()) {
  impl_->provenance = std::move(provenance);
  if (impl_->provenance.parsed_at.empty()) impl_->provenance.parsed_at = now_iso8601();
}

Corpus::Builder::~Builder() = default;
Corpus::Builder::Builder(Builder&&) noexcept = default;
Corpus::Builder& Corpus::Builder::operator=(Builder&&) noexcept = default;

ParseReport& Corpus::Builder::report() { return impl_->report; }

void Corpus::Builder::warn(const std::string& message, std::size_t max_warnings) {
  auto& warnings = impl_->report.warnings;
  if (warnings.size() < max_warnings) {
    warnings.push_back(message);
  } else if (warnings.size() == max_warnings) {
    warnings.push_back("(further warnings suppressed)");
  }
}

void Corpus::Builder::add_movie(std::string id, std::string title, std::optional<int> year,
                                std::vector<std::string> genres) {
  if (!impl_->movie_ids.insert(id).second) {
    ++impl_->report.malformed_lines;
    warn("duplicate movie id " + id + " ignored", 50);
    return;
  }
  impl_->movies.push_back(Movie{std::move(id), std::move(title), year, std::move(genres)});
}

void Corpus::Builder::add_character(std::string id, std::string name, std::string movie_id,
                                    Gender gender, std::optional<int> credit_position) {
  if (!impl_->character_ids.insert(id).second) {
    ++impl_->report.malformed_lines;
    warn("duplicate character id " + id + " ignored", 50);
    return;
  }
  if (credit_position && *credit_position < 1) credit_position = std::nullopt;
  impl_->characters.push_back(
      Impl::PendingCharacter{std::move(id), std::move(name), std::move(movie_id), gender, credit_position});
}

void Corpus::Builder::add_conversation(std::string id, std::string movie_id,
                                       std::array<std::string, 2> participant_ids,
                                       std::vector<Line> lines) {
  impl_->conversations.push_back(Impl::PendingConversation{std::move(id), std::move(movie_id),
                                                           std::move(participant_ids), std::move(lines)});
}

Corpus Corpus::Builder::build(bool deduplicate) {
  Corpus corpus;
  corpus.provenance_ = impl_->provenance;
  corpus.report_ = impl_->report;

  corpus.movies_ = std::move(impl_->movies);
  for (std::size_t i = 0; i < corpus.movies_.size(); ++i) {
    corpus.movie_index_.emplace(corpus.movies_[i].id, static_cast<std::int32_t>(i));
  }

  corpus.characters_.reserve(impl_->characters.size());
  for (auto& pending : impl_->characters) {
    auto movie = corpus.movie_index_.find(pending.movie_id);
    if (movie == corpus.movie_index_.end()) {
      fail(ErrorCode::UnresolvedReference,
           "character " + pending.id + " references unknown movie " + pending.movie_id);
    }
    Character character;
    character.id = std::move(pending.id);
    character.name = std::move(pending.name);
    character.movie = movie->second;
    character.gender = pending.gender;
    character.credit_position = pending.credit_position;
    corpus.character_index_.emplace(character.id, static_cast<std::int32_t>(corpus.characters_.size()));
    corpus.characters_.push_back(std::move(character));
  }

  std::unordered_set<std::string> seen_sequences;
  for (auto& pending : impl_->conversations) {
    auto movie = corpus.movie_index_.find(pending.movie_id);
    if (movie == corpus.movie_index_.end()) {
      fail(ErrorCode::UnresolvedReference,
           "conversation " + pending.id + " references unknown movie " + pending.movie_id);
    }
    Conversation conversation;
    conversation.id = std::move(pending.id);
    conversation.movie = movie->second;
    for (std::size_t k = 0; k < 2; ++k) {
      auto character = corpus.character_index_.find(pending.participant_ids[k]);
      if (character == corpus.character_index_.end()) {
        fail(ErrorCode::UnresolvedReference, "conversation " + conversation.id +
                                                 " references unknown character " +
                                                 pending.participant_ids[k]);
      }
      conversation.participants[k] = character->second;
    }
    if (conversation.participants[0] == conversation.participants[1]) {
      fail(ErrorCode::UnresolvedReference,
           "conversation " + conversation.id + " has identical participants");
    }

    conversation.utterances.reserve(pending.lines.size());
    std::string sequence_key = std::to_string(conversation.movie);
    for (auto& line : pending.lines) {
      auto speaker = corpus.character_index_.find(line.speaker_id);
      if (speaker == corpus.character_index_.end()) {
        fail(ErrorCode::UnresolvedReference, "conversation " + conversation.id +
                                                 " references unknown utterance speaker or line id " +
                                                 line.speaker_id);
      }
      if (speaker->second != conversation.participants[0] &&
          speaker->second != conversation.participants[1]) {
        fail(ErrorCode::UnresolvedReference, "conversation " + conversation.id + ": speaker " +
                                                 line.speaker_id + " is not a participant");
      }
      Utterance utterance;
      utterance.id = std::move(line.id);
      utterance.speaker = speaker->second;
      utterance.index_in_conversation = static_cast<std::int32_t>(conversation.utterances.size());
      utterance.text = std::move(line.text);
      utterance.tokens = tokenize(utterance.text);
      sequence_key += '\x1f';
      sequence_key += utterance.text;
      conversation.utterances.push_back(std::move(utterance));
    }

    if (deduplicate && !seen_sequences.insert(sequence_key).second) {
      ++corpus.report_.duplicate_conversations;
      if (corpus.report_.warnings.size() < 50) {
        corpus.report_.warnings.push_back("duplicate conversation " + conversation.id +
                                          " dropped (same movie and text sequence)");
      }
      continue;
    }
    corpus.utterance_count_ += conversation.utterances.size();
    corpus.conversations_.push_back(std::move(conversation));
  }

  return corpus;
}

// ---------------------------------------------------------------------------
// Parsing helpers shared by the file formats
// ---------------------------------------------------------------------------

namespace {

constexpr std::string_view kCornellSeparator = " +++$+++ ";

struct LineReader {
  std::vector<std::string> lines;
  std::size_t fallback_count = 0;

  static LineReader read(const std::filesystem::path& file) {
    std::ifstream in(file, std::ios::binary);
    if (!in) fail(ErrorCode::MissingFile, "cannot open " + file.string());
    std::ostringstream buffer;
    buffer << in.rdbuf();
    std::string bytes = buffer.str();

    LineReader reader;
    std::size_t start = 0;
    bool first = true;
    while (start <= bytes.size()) {
      std::size_t end = bytes.find('\n', start);
      if (end == std::string::npos) end = bytes.size();
      std::string_view line(bytes.data() + start, end - start);
      if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
      if (first && line.size() >= 3 && static_cast<unsigned char>(line[0]) == 0xef &&
          static_cast<unsigned char>(line[1]) == 0xbb && static_cast<unsigned char>(line[2]) == 0xbf) {
        line.remove_prefix(3);  // UTF-8 BOM
      }
      first = false;
      if (end == bytes.size() && line.empty()) break;  // no trailing empty line
      if (valid_utf8(line)) {
        reader.lines.emplace_back(line);
      } else {
        reader.lines.push_back(latin1_to_utf8(line));
        ++reader.fallback_count;
      }
      start = end + 1;
    }
    return reader;
  }
};

/// Splits into exactly `fields` pieces; the final piece keeps any further
/// separator occurrences (free text goes last in every Cornell file).
std::optional<std::vector<std::string_view>> split_cornell(std::string_view line, std::size_t fields) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (out.size() + 1 < fields) {
    std::size_t pos = line.find(kCornellSeparator, start);
    if (pos == std::string_view::npos) return std::nullopt;
    out.push_back(line.substr(start, pos - start));
    start = pos + kCornellSeparator.size();
  }
  out.push_back(line.substr(start));
  return out;
}

struct MalformedTracker {
  const ParseOptions& options;
  Corpus::Builder& builder;
  std::string first_message;

  void record(const std::string& message) {
    ++builder.report().malformed_lines;
    if (first_message.empty()) first_message = message;
    builder.warn(message, options.max_warnings);
  }

  void enforce_tolerance() const {
    const auto& report = builder.report();
    if (report.total_lines == 0) return;
    double fraction = static_cast<double>(report.malformed_lines) /
                      static_cast<double>(report.total_lines);
    if (fraction > options.malformed_tolerance) {
      fail(ErrorCode::FieldCountMismatch,
           std::to_string(report.malformed_lines) + " of " + std::to_string(report.total_lines) +
               " lines malformed (tolerance " + std::to_string(options.malformed_tolerance) +
               "); first: " + first_message);
    }
  }
};

Corpus parse_cornell(const std::filesystem::path& dir, const ParseOptions& options) {
  if (!std::filesystem::is_directory(dir)) {
    fail(ErrorCode::MissingFile, dir.string() + " is not a directory");
  }
  const auto titles_path = dir / "movie_titles_metadata.txt";
  const auto characters_path = dir / "movie_characters_metadata.txt";
  const auto lines_path = dir / "movie_lines.txt";
  const auto conversations_path = dir / "movie_conversations.txt";
  for (const auto& p : {titles_path, characters_path, lines_path, conversations_path}) {
    if (!std::filesystem::exists(p)) fail(ErrorCode::MissingFile, "missing corpus file " + p.string());
  }

  Corpus::Builder builder(Provenance{dir.string(), SourceFormat::Cornell, ""});
  MalformedTracker tracker{options, builder, ""};

  auto titles = LineReader::read(titles_path);
  builder.report().total_lines += titles.lines.size();
  builder.report().encoding_fallback_lines += titles.fallback_count;
  for (std::size_t i = 0; i < titles.lines.size(); ++i) {
    const std::string& line = titles.lines[i];
    if (line.empty()) continue;
    auto fields = split_cornell(line, 6);
    if (!fields) {
      tracker.record(titles_path.filename().string() + ":" + std::to_string(i + 1) +
                     ": expected 6 fields");
      continue;
    }
    auto& f = *fields;
    std::vector<std::string> genres = parse_bracketed_list(f[5]);
    builder.add_movie(std::string(f[0]), std::string(f[1]), parse_leading_int(f[2]),
                      std::move(genres));
  }

  auto characters = LineReader::read(characters_path);
  builder.report().total_lines += characters.lines.size();
  builder.report().encoding_fallback_lines += characters.fallback_count;
  for (std::size_t i = 0; i < characters.lines.size(); ++i) {
    const std::string& line = characters.lines[i];
    if (line.empty()) continue;
    auto fields = split_cornell(line, 6);
    if (!fields) {
      tracker.record(characters_path.filename().string() + ":" + std::to_string(i + 1) +
                     ": expected 6 fields");
      continue;
    }
    auto& f = *fields;
    builder.add_character(std::string(f[0]), std::string(f[1]), std::string(f[2]),
                          gender_from_code(f[4]), parse_leading_int(f[5]));
  }

  struct RawLine {
    std::string speaker_id;
    std::string text;
  };
  std::unordered_map<std::string, RawLine> lines_by_id;
  auto lines = LineReader::read(lines_path);
  builder.report().total_lines += lines.lines.size();
  builder.report().encoding_fallback_lines += lines.fallback_count;
  for (std::size_t i = 0; i < lines.lines.size(); ++i) {
    const std::string& line = lines.lines[i];
    if (line.empty()) continue;
    auto fields = split_cornell(line, 5);
    if (!fields) {
      tracker.record(lines_path.filename().string() + ":" + std::to_string(i + 1) +
                     ": expected 5 fields");
      continue;
    }
    auto& f = *fields;
    lines_by_id.emplace(std::string(f[0]), RawLine{std::string(f[1]), std::string(f[4])});
  }

  auto conversations = LineReader::read(conversations_path);
  builder.report().total_lines += conversations.lines.size();
  builder.report().encoding_fallback_lines += conversations.fallback_count;
  std::size_t conversation_counter = 0;
  for (std::size_t i = 0; i < conversations.lines.size(); ++i) {
    const std::string& line = conversations.lines[i];
    if (line.empty()) continue;
    auto fields = split_cornell(line, 4);
    if (!fields) {
      tracker.record(conversations_path.filename().string() + ":" + std::to_string(i + 1) +
                     ": expected 4 fields");
      continue;
    }
    auto& f = *fields;
    std::vector<std::string> line_ids = parse_bracketed_list(f[3]);
    std::vector<Corpus::Builder::Line> utterances;
    utterances.reserve(line_ids.size());
    for (std::string& line_id : line_ids) {
      auto it = lines_by_id.find(line_id);
      if (it == lines_by_id.end()) {
        fail(ErrorCode::UnresolvedReference,
             conversations_path.filename().string() + ":" + std::to_string(i + 1) +
                 ": unknown line id " + line_id);
      }
      utterances.push_back(
          Corpus::Builder::Line{std::move(line_id), it->second.speaker_id, it->second.text});
    }
    builder.add_conversation("c" + std::to_string(conversation_counter++), std::string(f[2]),
                             {std::string(f[0]), std::string(f[1])}, std::move(utterances));
  }

  if (builder.report().encoding_fallback_lines > 0) {
    builder.warn("input is not valid UTF-8 on " +
                     std::to_string(builder.report().encoding_fallback_lines) +
                     " lines; Latin-1 fallback applied",
                 options.max_warnings);
  }
  tracker.enforce_tolerance();
  return builder.build();
}

Corpus parse_jsonl(const std::filesystem::path& file, const ParseOptions& options) {
  if (std::filesystem::is_directory(file)) {
    fail(ErrorCode::MissingFile, file.string() + " is a directory; jsonl input is a file");
  }
  auto reader = LineReader::read(file);

  Corpus::Builder builder(Provenance{file.string(), SourceFormat::Jsonl, ""});
  builder.report().total_lines = reader.lines.size();
  builder.report().encoding_fallback_lines = reader.fallback_count;
  MalformedTracker tracker{options, builder, ""};

  std::unordered_map<std::string, std::string> movie_ids;       // title -> id
  std::unordered_map<std::string, std::string> character_ids;   // movie_id \x1f name -> id
  std::size_t conversation_counter = 0;

  auto intern_movie = [&](const std::string& title) -> std::string {
    auto it = movie_ids.find(title);
    if (it != movie_ids.end()) return it->second;
    std::string id = "m" + std::to_string(movie_ids.size());
    movie_ids.emplace(title, id);
    builder.add_movie(id, title, std::nullopt, {});
    return id;
  };
  auto intern_character = [&](const std::string& movie_id, const std::string& name) -> std::string {
    std::string key = movie_id + '\x1f' + name;
    auto it = character_ids.find(key);
    if (it != character_ids.end()) return it->second;
    std::string id = "u" + std::to_string(character_ids.size());
    character_ids.emplace(key, id);
    builder.add_character(id, name, movie_id, Gender::Unknown, std::nullopt);
    return id;
  };

  for (std::size_t i = 0; i < reader.lines.size(); ++i) {
    const std::string& line = reader.lines[i];
    if (line.empty()) continue;
    json record = json::parse(line, nullptr, false);
    std::string where = file.filename().string() + ":" + std::to_string(i + 1);
    if (record.is_discarded() || !record.is_object()) {
      tracker.record(where + ": not a JSON object");
      continue;
    }
    if (!record.contains("movie") || !record["movie"].is_string() ||
        !record.contains("participants") || !record["participants"].is_array() ||
        record["participants"].size() != 2 || !record.contains("utterances") ||
        !record["utterances"].is_array()) {
      tracker.record(where + ": expected {movie, participants[2], utterances[]}");
      continue;
    }
    const auto& participants = record["participants"];
    if (!participants[0].is_string() || !participants[1].is_string() ||
        participants[0] == participants[1]) {
      tracker.record(where + ": participants must be two distinct names");
      continue;
    }
    std::string movie_id = intern_movie(record["movie"].get<std::string>());
    std::array<std::string, 2> pair_ids = {
        intern_character(movie_id, participants[0].get<std::string>()),
        intern_character(movie_id, participants[1].get<std::string>())};

    std::string conversation_id = "c" + std::to_string(conversation_counter);
    std::vector<Corpus::Builder::Line> utterances;
    bool ok = true;
    for (const auto& u : record["utterances"]) {
      if (!u.is_object() || !u.contains("speaker") || !u["speaker"].is_string() ||
          !u.contains("text") || !u["text"].is_string()) {
        ok = false;
        break;
      }
      std::string speaker_name = u["speaker"].get<std::string>();
      if (speaker_name != participants[0].get<std::string>() &&
          speaker_name != participants[1].get<std::string>()) {
        ok = false;
        break;
      }
      std::string utterance_id =
          conversation_id + "u" + std::to_string(utterances.size());
      utterances.push_back(Corpus::Builder::Line{std::move(utterance_id),
                                                 intern_character(movie_id, speaker_name),
                                                 u["text"].get<std::string>()});
    }
    if (!ok) {
      tracker.record(where + ": utterances must be {speaker, text} with speaker in participants");
      continue;
    }
    builder.add_conversation(conversation_id, movie_id, pair_ids, std::move(utterances));
    ++conversation_counter;
  }

  if (conversation_counter == 0) {
    builder.warn("no conversations found in " + file.string(), options.max_warnings);
  }
  tracker.enforce_tolerance();
  return builder.build();
}

Corpus parse_normalized(const std::filesystem::path& file, const ParseOptions& options) {
  if (std::filesystem::is_directory(file)) {
    fail(ErrorCode::MissingFile, file.string() + " is a directory; normalized input is a file");
  }
  auto reader = LineReader::read(file);

  Provenance provenance{file.string(), SourceFormat::Normalized, ""};
  // save_normalized writes the provenance record first; restore the original
  // source tag from it so save -> load -> save reproduces the bytes.
  for (const std::string& line : reader.lines) {
    if (line.empty()) continue;
    json record = json::parse(line, nullptr, false);
    if (record.is_object() && record.value("kind", "") == "provenance") {
      provenance.source = record.value("source", provenance.source);
      if (auto format = format_from_name(record.value("format", ""))) {
        provenance.format = *format;
      }
    }
    break;
  }
  Corpus::Builder builder(provenance);
  builder.report().total_lines = reader.lines.size();
  builder.report().encoding_fallback_lines = reader.fallback_count;
  MalformedTracker tracker{options, builder, ""};

  bool any = false;
  for (std::size_t i = 0; i < reader.lines.size(); ++i) {
    const std::string& line = reader.lines[i];
    if (line.empty()) continue;
    std::string where = file.filename().string() + ":" + std::to_string(i + 1);
    json record = json::parse(line, nullptr, false);
    if (record.is_discarded() || !record.is_object() || !record.contains("kind")) {
      tracker.record(where + ": not a record with a kind field");
      continue;
    }
    any = true;
    const std::string kind = record.value("kind", "");
    if (kind == "provenance") {
      continue;  // consumed above
    }
    if (kind == "movie") {
      std::optional<int> year;
      if (record.contains("year")) year = record["year"].get<int>();
      builder.add_movie(record.value("id", ""), record.value("title", ""), year,
                        record.value("genres", std::vector<std::string>{}));
    } else if (kind == "character") {
      std::optional<int> credit;
      if (record.contains("credit_position")) credit = record["credit_position"].get<int>();
      builder.add_character(record.value("id", ""), record.value("name", ""),
                            record.value("movie", ""), gender_from_code(record.value("gender", "?")),
                            credit);
    } else if (kind == "conversation") {
      auto participants = record.value("participants", std::vector<std::string>{});
      if (participants.size() != 2 || !record.contains("utterances")) {
        tracker.record(where + ": conversation needs participants[2] and utterances");
        continue;
      }
      std::vector<Corpus::Builder::Line> utterances;
      for (const auto& u : record["utterances"]) {
        utterances.push_back(
            Corpus::Builder::Line{u.value("id", ""), u.value("speaker", ""), u.value("text", "")});
      }
      builder.add_conversation(record.value("id", ""), record.value("movie", ""),
                               {participants[0], participants[1]}, std::move(utterances));
    } else {
      tracker.record(where + ": unknown record kind `" + kind + "`");
    }
  }
  if (!any) builder.warn("no records found in " + file.string(), options.max_warnings);

  tracker.enforce_tolerance();
  // dedup already happened when the normalized file was produced
  return builder.build(false);
}

}  // namespace

Corpus parse_corpus(const std::filesystem::path& source, SourceFormat format,
                    const ParseOptions& options) {
  if (!std::filesystem::exists(source)) {
    fail(ErrorCode::MissingFile, source.string() + " does not exist");
  }
  switch (format) {
    case SourceFormat::Cornell: return parse_cornell(source, options);
    case SourceFormat::Jsonl: return parse_jsonl(source, options);
    default: return parse_normalized(source, options);
  }
}

Corpus load_normalized(const std::filesystem::path& file, const ParseOptions& options) {
  return parse_corpus(file, SourceFormat::Normalized, options);
}

void save_normalized(const Corpus& corpus, std::ostream& out) {
  {
    json record;
    record["kind"] = "provenance";
    record["schema"] = 1;
    record["source"] = corpus.provenance().source;
    record["format"] = std::string(format_name(corpus.provenance().format));
    out << record.dump() << '\n';
  }
  for (const Movie& movie : corpus.movies()) {
    json record;
    record["kind"] = "movie";
    record["id"] = movie.id;
    record["title"] = movie.title;
    if (movie.year) record["year"] = *movie.year;
    record["genres"] = movie.genres;
    out << record.dump() << '\n';
  }
  for (const Character& character : corpus.characters()) {
    json record;
    record["kind"] = "character";
    record["id"] = character.id;
    record["name"] = character.name;
    record["movie"] = corpus.movie(character.movie).id;
    record["gender"] = std::string(1, gender_code(character.gender));
    if (character.credit_position) record["credit_position"] = *character.credit_position;
    out << record.dump() << '\n';
  }
  for (const Conversation& conversation : corpus.conversations()) {
    json record;
    record["kind"] = "conversation";
    record["id"] = conversation.id;
    record["movie"] = corpus.movie(conversation.movie).id;
    record["participants"] = {corpus.character(conversation.participants[0]).id,
                              corpus.character(conversation.participants[1]).id};
    json utterances = json::array();
    for (const Utterance& utterance : conversation.utterances) {
      json u;
      u["id"] = utterance.id;
      u["speaker"] = corpus.character(utterance.speaker).id;
      u["text"] = utterance.text;
      utterances.push_back(std::move(u));
    }
    record["utterances"] = std::move(utterances);
    out << record.dump() << '\n';
  }
}

void save_normalized(const Corpus& corpus, const std::filesystem::path& file) {
  std::ofstream out(file, std::ios::binary);
  if (!out) fail(ErrorCode::MissingFile, "cannot write " + file.string());
  save_normalized(corpus, out);
}

ExchangeIndex group_exchanges(const Corpus& corpus, std::vector<Exchange> exchanges,
                              int min_exchanges, std::int32_t gap) {
  if (min_exchanges < 1) fail(ErrorCode::InvalidConfig, "min_exchanges must be >= 1");

  std::map<std::pair<std::int32_t, std::int32_t>, std::vector<Exchange>> by_pair;
  for (Exchange& exchange : exchanges) {
    const auto& utterances = corpus.conversation(exchange.conversation).utterances;
    std::int32_t a = utterances[static_cast<std::size_t>(exchange.trigger_pos)].speaker;
    std::int32_t b = utterances[static_cast<std::size_t>(exchange.reply_pos)].speaker;
    by_pair[{a, b}].push_back(exchange);
  }

  ExchangeIndex index;
  index.gap = gap;
  for (auto& [key, pair_exchanges] : by_pair) {
    if (pair_exchanges.size() < static_cast<std::size_t>(min_exchanges)) {
      ++index.removed_pairs;
      continue;
    }
    index.total_exchanges += pair_exchanges.size();
    index.pairs.push_back(PairExchanges{key.first, key.second, std::move(pair_exchanges)});
  }
  std::sort(index.pairs.begin(), index.pairs.end(),
            [&corpus](const PairExchanges& x, const PairExchanges& y) {
              const std::string& xi = corpus.character(x.initiator).id;
              const std::string& yi = corpus.character(y.initiator).id;
              if (xi != yi) return xi < yi;
              return corpus.character(x.respondent).id < corpus.character(y.respondent).id;
            });
  return index;
}

ExchangeIndex extract_exchanges(const Corpus& corpus, int min_exchanges) {
  std::vector<Exchange> exchanges;
  for (std::size_t c = 0; c < corpus.conversations().size(); ++c) {
    const Conversation& conversation = corpus.conversations()[c];
    for (std::size_t i = 0; i + 1 < conversation.utterances.size(); ++i) {
      std::int32_t a = conversation.utterances[i].speaker;
      std::int32_t b = conversation.utterances[i + 1].speaker;
      if (a == b) continue;  // same-speaker boundary: no exchange, no merging
      exchanges.push_back(Exchange{static_cast<std::int32_t>(c), static_cast<std::int32_t>(i),
                                   static_cast<std::int32_t>(i + 1)});
    }
  }
  return group_exchanges(corpus, std::move(exchanges), min_exchanges, 1);
}

}  // namespace chameleon
