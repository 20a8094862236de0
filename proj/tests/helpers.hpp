#pragma once

#include <unistd.h>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "chameleon/corpus.hpp"
#include "chameleon/markers.hpp"

#ifndef CHAMELEON_DATA_DIR
#error "build must define CHAMELEON_DATA_DIR"
#endif

namespace testing {

inline std::filesystem::path data_dir() { return CHAMELEON_DATA_DIR; }

inline std::filesystem::path shipped_lexicon_path() {
  return data_dir() / "lexicons" / "default.tsv";
}

inline const chameleon::Lexicon& shipped_lexicon() {
  static chameleon::Lexicon lexicon = chameleon::Lexicon::load(shipped_lexicon_path());
  return lexicon;
}

/// Fresh scratch directory, removed when the object dies.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    path_ = std::filesystem::temp_directory_path() /
            ("chameleon_test_" + tag + "_" + std::to_string(::getpid()));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() { std::filesystem::remove_all(path_); }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path file(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

inline void write_file(const std::filesystem::path& path, const std::string& bytes) {
  std::ofstream out(path, std::ios::binary);
  out << bytes;
}

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

/// Two characters, one movie; each element of `exchanges` becomes its own
/// two-utterance conversation (A speaks first, B replies), so adjacent
/// exchanges are exactly the given (trigger text, reply text) pairs.
inline chameleon::Corpus two_speaker_corpus(
    const std::vector<std::pair<std::string, std::string>>& exchanges) {
  chameleon::Corpus::Builder builder(
      chameleon::Provenance{"fixture", chameleon::SourceFormat::Jsonl, ""});
  builder.add_movie("m0", "fixture", std::nullopt, {});
  builder.add_character("a", "A", "m0", chameleon::Gender::Unknown, std::nullopt);
  builder.add_character("b", "B", "m0", chameleon::Gender::Unknown, std::nullopt);
  for (std::size_t i = 0; i < exchanges.size(); ++i) {
    std::string id = "c" + std::to_string(i);
    builder.add_conversation(id, "m0", {"a", "b"},
                             {{id + "u0", "a", exchanges[i].first},
                              {id + "u1", "b", exchanges[i].second}});
  }
  // fixtures repeat texts on purpose; keep every conversation
  return builder.build(false);
}

/// One conversation with explicit (speaker id, text) turns; speakers must be
/// "a" or "b".
inline chameleon::Corpus one_conversation_corpus(
    const std::vector<std::pair<std::string, std::string>>& turns) {
  chameleon::Corpus::Builder builder(
      chameleon::Provenance{"fixture", chameleon::SourceFormat::Jsonl, ""});
  builder.add_movie("m0", "fixture", std::nullopt, {});
  builder.add_character("a", "A", "m0", chameleon::Gender::Unknown, std::nullopt);
  builder.add_character("b", "B", "m0", chameleon::Gender::Unknown, std::nullopt);
  std::vector<chameleon::Corpus::Builder::Line> lines;
  for (std::size_t i = 0; i < turns.size(); ++i) {
    lines.push_back({"u" + std::to_string(i), turns[i].first, turns[i].second});
  }
  builder.add_conversation("c0", "m0", {"a", "b"}, std::move(lines));
  return builder.build();
}

}  // namespace testing
