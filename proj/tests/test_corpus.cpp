#include <doctest.h>

#include <sstream>

#include "chameleon/corpus.hpp"
#include "chameleon/error.hpp"
#include "helpers.hpp"

using namespace chameleon;

namespace {

constexpr const char* kSep = " +++$+++ ";

std::string join6(const std::string& a, const std::string& b, const std::string& c,
                  const std::string& d, const std::string& e, const std::string& f) {
  return a + kSep + b + kSep + c + kSep + d + kSep + e + kSep + f + "\n";
}

std::string join5(const std::string& a, const std::string& b, const std::string& c,
                  const std::string& d, const std::string& e) {
  return a + kSep + b + kSep + c + kSep + d + kSep + e + "\n";
}

std::string join4(const std::string& a, const std::string& b, const std::string& c,
                  const std::string& d) {
  return a + kSep + b + kSep + c + kSep + d + "\n";
}

/// Two movies, three characters, three conversations. Exercises the year
/// suffix ("1999/I"), missing year ("?"), missing credit, genre lists, BOM,
/// CRLF line endings and a text containing the field separator.
void write_cornell_fixture(const testing::TempDir& dir) {
  std::string titles;
  titles += "\xEF\xBB\xBF";  // UTF-8 BOM on the first line
  titles += join6("m0", "ten things", "1999/I", "6.90", "62847", "['comedy', 'romance']");
  titles += join6("m1", "night show", "?", "7.10", "100", "[]");
  // CRLF endings must be tolerated
  std::string crlf;
  for (char c : titles) {
    if (c == '\n') crlf += "\r\n";
    else crlf += c;
  }
  testing::write_file(dir.file("movie_titles_metadata.txt"), crlf);

  std::string characters;
  characters += join6("u0", "BIANCA", "m0", "ten things", "f", "4");
  characters += join6("u1", "CAMERON", "m0", "ten things", "m", "3");
  characters += join6("u2", "HOST", "m1", "night show", "?", "?");
  testing::write_file(dir.file("movie_characters_metadata.txt"), characters);

  std::string lines;
  lines += join5("L1", "u0", "m0", "BIANCA", "They do not!");
  lines += join5("L2", "u1", "m0", "CAMERON", "They do to!");
  lines += join5("L3", "u0", "m0", "BIANCA", "I hope so.");
  lines += join5("L4", "u1", "m0", "CAMERON", "Who knows.");
  // greedy last field: the separator inside the text must survive
  lines += join5("L5", "u0", "m0", "BIANCA", std::string("wait") + kSep + "what");
  lines += join5("L6", "u1", "m0", "CAMERON", "Nothing.");
  testing::write_file(dir.file("movie_lines.txt"), lines);

  std::string conversations;
  conversations += join4("u0", "u1", "m0", "['L1', 'L2']");
  conversations += join4("u0", "u1", "m0", "['L3', 'L4']");
  conversations += join4("u0", "u1", "m0", "['L5', 'L6']");
  testing::write_file(dir.file("movie_conversations.txt"), conversations);
}

}  // namespace

TEST_CASE("cornell fixture parses into a fully resolved corpus") {
  testing::TempDir dir("cornell");
  write_cornell_fixture(dir);
  Corpus corpus = parse_corpus(dir.path(), SourceFormat::Cornell);

  REQUIRE(corpus.movies().size() == 2);
  CHECK(corpus.movies()[0].id == "m0");
  CHECK(corpus.movies()[0].title == "ten things");
  CHECK(corpus.movies()[0].year == 1999);  // "1999/I" keeps the leading int
  CHECK(corpus.movies()[0].genres == std::vector<std::string>{"comedy", "romance"});
  CHECK_FALSE(corpus.movies()[1].year.has_value());
  CHECK(corpus.movies()[1].genres.empty());

  REQUIRE(corpus.characters().size() == 3);
  const Character& bianca = corpus.characters()[0];
  CHECK(bianca.name == "BIANCA");
  CHECK(bianca.gender == Gender::Female);
  CHECK(bianca.credit_position == 4);
  CHECK(corpus.movie(bianca.movie).id == "m0");
  CHECK(corpus.characters()[1].gender == Gender::Male);
  CHECK(corpus.characters()[2].gender == Gender::Unknown);
  CHECK_FALSE(corpus.characters()[2].credit_position.has_value());

  REQUIRE(corpus.conversations().size() == 3);
  CHECK(corpus.utterance_count() == 6);
  const Conversation& first = corpus.conversations()[0];
  CHECK(first.id == "c0");
  REQUIRE(first.utterances.size() == 2);
  CHECK(first.utterances[0].text == "They do not!");
  CHECK(first.utterances[0].tokens == std::vector<std::string>{"they", "do", "not"});
  CHECK(corpus.character(first.utterances[0].speaker).id == "u0");
  CHECK(corpus.character(first.utterances[1].speaker).id == "u1");
  CHECK(first.utterances[1].index_in_conversation == 1);

  // field separator embedded in a text survives via the greedy last field
  CHECK(corpus.conversations()[2].utterances[0].text == std::string("wait") + kSep + "what");

  CHECK(corpus.find_movie("m1").has_value());
  CHECK_FALSE(corpus.find_movie("m9").has_value());
  CHECK(corpus.find_character("u2").has_value());

  CHECK(corpus.provenance().format == SourceFormat::Cornell);
  CHECK(corpus.report().malformed_lines == 0);
  CHECK(corpus.report().encoding_fallback_lines == 0);
}

TEST_CASE("cornell parse falls back to latin-1 for invalid utf-8 lines") {
  testing::TempDir dir("cornell_enc");
  write_cornell_fixture(dir);
  // 0xE9 is e-acute in Latin-1 and invalid UTF-8 on its own
  std::string lines = testing::read_file(dir.file("movie_lines.txt"));
  lines += join5("L7", "u0", "m0", "BIANCA", "caf\xE9 later?");
  lines += join5("L8", "u1", "m0", "CAMERON", "Sure.");
  testing::write_file(dir.file("movie_lines.txt"), lines);
  std::string conversations = testing::read_file(dir.file("movie_conversations.txt"));
  conversations += join4("u0", "u1", "m0", "['L7', 'L8']");
  testing::write_file(dir.file("movie_conversations.txt"), conversations);

  Corpus corpus = parse_corpus(dir.path(), SourceFormat::Cornell);
  CHECK(corpus.report().encoding_fallback_lines == 1);
  REQUIRE(corpus.report().warnings.size() >= 1);
  CHECK(corpus.report().warnings[0].find("Latin-1") != std::string::npos);
  CHECK(corpus.conversations()[3].utterances[0].text == "caf\xC3\xA9 later?");
}

TEST_CASE("cornell parse enforces the malformed-line tolerance") {
  testing::TempDir dir("cornell_bad");
  write_cornell_fixture(dir);
  std::string lines = testing::read_file(dir.file("movie_lines.txt"));
  // four fields instead of five, and not referenced by any conversation
  lines += "L9" + std::string(kSep) + "u0" + kSep + "m0" + kSep + "BIANCA\n";
  testing::write_file(dir.file("movie_lines.txt"), lines);

  // 1 malformed out of ~12 data lines blows the default 1% tolerance
  CHECK_THROWS_WITH_AS(parse_corpus(dir.path(), SourceFormat::Cornell),
                       doctest::Contains("movie_lines.txt:7"), Error);
  try {
    parse_corpus(dir.path(), SourceFormat::Cornell);
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::FieldCountMismatch);
  }

  ParseOptions loose;
  loose.malformed_tolerance = 0.5;
  Corpus corpus = parse_corpus(dir.path(), SourceFormat::Cornell, loose);
  CHECK(corpus.report().malformed_lines == 1);
  CHECK(corpus.conversations().size() == 3);
}

TEST_CASE("cornell parse rejects conversations citing unknown line ids") {
  testing::TempDir dir("cornell_ref");
  write_cornell_fixture(dir);
  std::string conversations = testing::read_file(dir.file("movie_conversations.txt"));
  conversations += join4("u0", "u1", "m0", "['L99']");
  testing::write_file(dir.file("movie_conversations.txt"), conversations);

  CHECK_THROWS_WITH_AS(parse_corpus(dir.path(), SourceFormat::Cornell),
                       doctest::Contains("L99"), Error);
}

TEST_CASE("duplicate conversations collapse to the first occurrence") {
  testing::TempDir dir("cornell_dup");
  write_cornell_fixture(dir);
  std::string conversations = testing::read_file(dir.file("movie_conversations.txt"));
  conversations += join4("u0", "u1", "m0", "['L1', 'L2']");  // same texts as c0
  testing::write_file(dir.file("movie_conversations.txt"), conversations);

  Corpus corpus = parse_corpus(dir.path(), SourceFormat::Cornell);
  CHECK(corpus.conversations().size() == 3);
  CHECK(corpus.report().duplicate_conversations == 1);
}

TEST_CASE("parse_corpus reports a missing source") {
  testing::TempDir dir("missing");
  CHECK_THROWS_AS(parse_corpus(dir.file("nope"), SourceFormat::Cornell), Error);
  try {
    parse_corpus(dir.file("nope"), SourceFormat::Jsonl);
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::MissingFile);
  }
}

TEST_CASE("jsonl parse interns movies and characters by name") {
  testing::TempDir dir("jsonl");
  std::string body;
  body +=
      R"({"movie": "alpha", "participants": ["ann", "bob"], "utterances": [{"speaker": "ann", "text": "the cat"}, {"speaker": "bob", "text": "a dog"}]})"
      "\n";
  body +=
      R"({"movie": "alpha", "participants": ["ann", "bob"], "utterances": [{"speaker": "bob", "text": "not now"}, {"speaker": "ann", "text": "why not"}]})"
      "\n";
  body +=
      R"({"movie": "beta", "participants": ["cid", "dee"], "utterances": [{"speaker": "cid", "text": "hello"}]})"
      "\n";
  testing::write_file(dir.file("dialogs.jsonl"), body);

  Corpus corpus = parse_corpus(dir.file("dialogs.jsonl"), SourceFormat::Jsonl);
  CHECK(corpus.movies().size() == 2);   // "alpha" interned once
  CHECK(corpus.characters().size() == 4);
  REQUIRE(corpus.conversations().size() == 3);
  CHECK(corpus.conversations()[0].id == "c0");
  CHECK(corpus.conversations()[0].utterances[0].id == "c0u0");
  CHECK(corpus.character(corpus.conversations()[1].utterances[0].speaker).name == "bob");
  CHECK(corpus.provenance().format == SourceFormat::Jsonl);
}

TEST_CASE("jsonl parse counts malformed records against the tolerance") {
  testing::TempDir dir("jsonl_bad");
  std::string body;
  body += "this is not json\n";
  body += R"({"movie": "alpha", "participants": ["ann"], "utterances": []})" "\n";  // one participant
  body +=
      R"({"movie": "alpha", "participants": ["ann", "bob"], "utterances": [{"speaker": "eve", "text": "hi"}]})"
      "\n";  // speaker not a participant
  body +=
      R"({"movie": "alpha", "participants": ["ann", "bob"], "utterances": [{"speaker": "ann", "text": "hi"}]})"
      "\n";
  testing::write_file(dir.file("dialogs.jsonl"), body);

  CHECK_THROWS_AS(parse_corpus(dir.file("dialogs.jsonl"), SourceFormat::Jsonl), Error);

  ParseOptions loose;
  loose.malformed_tolerance = 0.9;
  Corpus corpus = parse_corpus(dir.file("dialogs.jsonl"), SourceFormat::Jsonl, loose);
  CHECK(corpus.report().malformed_lines == 3);
  CHECK(corpus.conversations().size() == 1);
}

TEST_CASE("jsonl parse warns on an input with no conversations") {
  testing::TempDir dir("jsonl_empty");
  testing::write_file(dir.file("empty.jsonl"), "\n\n");
  Corpus corpus = parse_corpus(dir.file("empty.jsonl"), SourceFormat::Jsonl);
  CHECK(corpus.conversations().empty());
  REQUIRE(corpus.report().warnings.size() == 1);
  CHECK(corpus.report().warnings[0].find("no conversations") != std::string::npos);
}

TEST_CASE("normalized save/load round-trips bytes and structure") {
  testing::TempDir dir("norm");
  write_cornell_fixture(dir);
  Corpus original = parse_corpus(dir.path(), SourceFormat::Cornell);

  save_normalized(original, dir.file("corpus.norm"));
  Corpus loaded = load_normalized(dir.file("corpus.norm"));

  // the provenance record restores the original source tag
  CHECK(loaded.provenance().source == original.provenance().source);
  CHECK(loaded.provenance().format == SourceFormat::Cornell);

  REQUIRE(loaded.movies().size() == original.movies().size());
  REQUIRE(loaded.characters().size() == original.characters().size());
  REQUIRE(loaded.conversations().size() == original.conversations().size());
  for (std::size_t i = 0; i < original.characters().size(); ++i) {
    CHECK(loaded.characters()[i].id == original.characters()[i].id);
    CHECK(loaded.characters()[i].gender == original.characters()[i].gender);
    CHECK(loaded.characters()[i].credit_position == original.characters()[i].credit_position);
  }
  for (std::size_t i = 0; i < original.conversations().size(); ++i) {
    const Conversation& a = original.conversations()[i];
    const Conversation& b = loaded.conversations()[i];
    CHECK(a.id == b.id);
    REQUIRE(a.utterances.size() == b.utterances.size());
    for (std::size_t j = 0; j < a.utterances.size(); ++j) {
      CHECK(a.utterances[j].id == b.utterances[j].id);
      CHECK(a.utterances[j].text == b.utterances[j].text);
      CHECK(a.utterances[j].tokens == b.utterances[j].tokens);
    }
  }

  save_normalized(loaded, dir.file("again.norm"));
  CHECK(testing::read_file(dir.file("again.norm")) == testing::read_file(dir.file("corpus.norm")));
}

TEST_CASE("builder rejects dangling references") {
  Provenance provenance{"fixture", SourceFormat::Jsonl, ""};

  SUBCASE("character references an unknown movie") {
    Corpus::Builder builder(provenance);
    builder.add_character("a", "A", "m9", Gender::Unknown, std::nullopt);
    CHECK_THROWS_AS(builder.build(), Error);
  }
  SUBCASE("conversation references an unknown character") {
    Corpus::Builder builder(provenance);
    builder.add_movie("m0", "t", std::nullopt, {});
    builder.add_character("a", "A", "m0", Gender::Unknown, std::nullopt);
    builder.add_conversation("c0", "m0", {"a", "zz"}, {});
    CHECK_THROWS_WITH_AS(builder.build(), doctest::Contains("zz"), Error);
  }
  SUBCASE("identical participants are rejected") {
    Corpus::Builder builder(provenance);
    builder.add_movie("m0", "t", std::nullopt, {});
    builder.add_character("a", "A", "m0", Gender::Unknown, std::nullopt);
    builder.add_conversation("c0", "m0", {"a", "a"}, {});
    CHECK_THROWS_WITH_AS(builder.build(), doctest::Contains("identical participants"), Error);
  }
  SUBCASE("speakers must be participants") {
    Corpus::Builder builder(provenance);
    builder.add_movie("m0", "t", std::nullopt, {});
    builder.add_character("a", "A", "m0", Gender::Unknown, std::nullopt);
    builder.add_character("b", "B", "m0", Gender::Unknown, std::nullopt);
    builder.add_character("x", "X", "m0", Gender::Unknown, std::nullopt);
    builder.add_conversation("c0", "m0", {"a", "b"}, {{"u0", "x", "hi"}});
    CHECK_THROWS_WITH_AS(builder.build(), doctest::Contains("not a participant"), Error);
  }
  SUBCASE("duplicate entity ids are malformed, first wins") {
    Corpus::Builder builder(provenance);
    builder.add_movie("m0", "first", std::nullopt, {});
    builder.add_movie("m0", "second", std::nullopt, {});
    Corpus corpus = builder.build();
    REQUIRE(corpus.movies().size() == 1);
    CHECK(corpus.movies()[0].title == "first");
    CHECK(corpus.report().malformed_lines == 1);
  }
}

TEST_CASE("extract_exchanges pairs adjacent distinct-speaker turns") {
  Corpus corpus = testing::one_conversation_corpus(
      {{"a", "one"}, {"b", "two"}, {"a", "three"}, {"a", "four"}, {"b", "five"}});

  ExchangeIndex index = extract_exchanges(corpus, 1);
  REQUIRE(index.pairs.size() == 2);
  CHECK(index.total_exchanges == 3);
  CHECK(index.removed_pairs == 0);
  CHECK(index.gap == 1);

  // canonical order: by (initiator id, respondent id)
  const PairExchanges& ab = index.pairs[0];
  CHECK(corpus.character(ab.initiator).id == "a");
  CHECK(corpus.character(ab.respondent).id == "b");
  REQUIRE(ab.exchanges.size() == 2);  // (0,1) and (3,4); (2,3) is same-speaker
  CHECK(ab.exchanges[0].trigger_pos == 0);
  CHECK(ab.exchanges[0].reply_pos == 1);
  CHECK(ab.exchanges[1].trigger_pos == 3);
  CHECK(ab.exchanges[1].reply_pos == 4);
  CHECK(ab.exchanges[0].gap() == 1);

  const PairExchanges& ba = index.pairs[1];
  CHECK(corpus.character(ba.initiator).id == "b");
  REQUIRE(ba.exchanges.size() == 1);
  CHECK(ba.exchanges[0].trigger_pos == 1);
  CHECK(ba.exchanges[0].reply_pos == 2);
}

TEST_CASE("extract_exchanges drops pairs below min_exchanges") {
  Corpus corpus = testing::one_conversation_corpus(
      {{"a", "one"}, {"b", "two"}, {"a", "three"}, {"a", "four"}, {"b", "five"}});
  ExchangeIndex index = extract_exchanges(corpus, 2);
  REQUIRE(index.pairs.size() == 1);
  CHECK(index.removed_pairs == 1);
  CHECK(index.total_exchanges == 2);
  CHECK(corpus.character(index.pairs[0].initiator).id == "a");
}

TEST_CASE("extract_exchanges pools one pair across conversations") {
  Corpus corpus = testing::two_speaker_corpus({{"x", "y"}, {"x", "y"}, {"x", "y"}});
  ExchangeIndex index = extract_exchanges(corpus, 3);
  REQUIRE(index.pairs.size() == 1);
  CHECK(index.pairs[0].exchanges.size() == 3);
  CHECK(index.pairs[0].exchanges[0].conversation == 0);
  CHECK(index.pairs[0].exchanges[2].conversation == 2);
}

TEST_CASE("group_exchanges validates min_exchanges") {
  Corpus corpus = testing::two_speaker_corpus({{"x", "y"}});
  CHECK_THROWS_AS(group_exchanges(corpus, {}, 0, 1), Error);
}
