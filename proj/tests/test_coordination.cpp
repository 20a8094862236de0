#include <doctest.h>

#include <cmath>
#include <vector>

#include "chameleon/coordination.hpp"
#include "chameleon/error.hpp"
#include "chameleon/rng.hpp"
#include "chameleon/synth.hpp"
#include "helpers.hpp"

using namespace chameleon;

namespace {

PairStats make_stats(std::int64_t n, std::int64_t n_trigger, std::int64_t n_reply,
                     std::int64_t n_both) {
  PairStats stats;
  stats.initiator = 0;
  stats.respondent = 1;
  stats.family = MarkerFamily::Articles;
  stats.n_replies = n;
  stats.n_trigger = n_trigger;
  stats.n_reply_exhibit = n_reply;
  stats.n_both = n_both;
  return stats;
}

}  // namespace

TEST_CASE("exhibit table mirrors the lexicon per utterance") {
  Corpus corpus = testing::two_speaker_corpus({{"the tree", "not yet"}});
  ExhibitTable table(corpus, testing::shipped_lexicon());
  CHECK(table.exhibits(0, 0, MarkerFamily::Articles));
  CHECK_FALSE(table.exhibits(0, 0, MarkerFamily::Negations));
  CHECK(table.exhibits(0, 1, MarkerFamily::Negations));
  CHECK(table.exhibits(0, 1, MarkerFamily::Adverbs));  // "yet"
  CHECK_FALSE(table.exhibits(0, 1, MarkerFamily::Articles));
}

TEST_CASE("exhibit table is identical for any thread count") {
  Corpus corpus = testing::two_speaker_corpus(
      {{"the tree", "not yet"}, {"you and i", "of course"}, {"tree", "tree"}});
  ExhibitTable one(corpus, testing::shipped_lexicon(), 1);
  ExhibitTable four(corpus, testing::shipped_lexicon(), 4);
  for (std::int32_t c = 0; c < 3; ++c) {
    for (std::int32_t u = 0; u < 2; ++u) {
      CHECK(one.mask(c, u) == four.mask(c, u));
    }
  }
}

TEST_CASE("pair_stats counts the four indicator cells") {
  // trigger indicators 1,1,0,0 against reply indicators 1,0,1,0
  Corpus corpus = testing::two_speaker_corpus(
      {{"the end", "the same"}, {"the end", "tree"}, {"tree", "the same"}, {"tree", "tree"}});
  ExhibitTable table(corpus, testing::shipped_lexicon());
  ExchangeIndex index = extract_exchanges(corpus, 1);
  REQUIRE(index.pairs.size() == 1);

  PairStats stats = pair_stats(table, index.pairs[0].exchanges, MarkerFamily::Articles);
  CHECK(stats.n_replies == 4);
  CHECK(stats.n_trigger == 2);
  CHECK(stats.n_reply_exhibit == 2);
  CHECK(stats.n_both == 1);
  CHECK(stats.initiator == index.pairs[0].initiator);
  CHECK(stats.respondent == index.pairs[0].respondent);
}

TEST_CASE("pair_stats on no exchanges is all zeros") {
  Corpus corpus = testing::two_speaker_corpus({{"x", "y"}});
  ExhibitTable table(corpus, testing::shipped_lexicon());
  PairStats stats = pair_stats(table, {}, MarkerFamily::Negations);
  CHECK(stats.n_replies == 0);
  CHECK(stats.n_trigger == 0);
  CHECK(stats.initiator == -1);
}

TEST_CASE("pair_stats refuses exchanges from different speaker pairs") {
  Corpus corpus = testing::one_conversation_corpus({{"a", "x"}, {"b", "y"}, {"a", "z"}});
  ExhibitTable table(corpus, testing::shipped_lexicon());
  std::vector<Exchange> mixed = {{0, 0, 1}, {0, 1, 2}};  // a->b then b->a
  CHECK_THROWS_AS(pair_stats(table, mixed, MarkerFamily::Articles), Error);
  try {
    pair_stats(table, mixed, MarkerFamily::Articles);
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::MixedPairs);
  }
}

TEST_CASE("pair_accommodation is conditional minus baseline") {
  // n=20, trigger on 10, reply on 12, both on 8
  PairAccommodation acc = pair_accommodation(make_stats(20, 10, 12, 8));
  CHECK(acc.eligible);
  CHECK(acc.p_cond == doctest::Approx(0.8));
  CHECK(acc.p_base == doctest::Approx(0.6));
  CHECK(acc.value == doctest::Approx(0.2));
}

TEST_CASE("pair_accommodation through the full pipeline") {
  // 8 both, 2 trigger-only, 4 reply-only, 6 neither
  std::vector<std::pair<std::string, std::string>> exchanges;
  for (int i = 0; i < 8; ++i) exchanges.push_back({"the word", "the reply"});
  for (int i = 0; i < 2; ++i) exchanges.push_back({"the word", "tree"});
  for (int i = 0; i < 4; ++i) exchanges.push_back({"tree", "the reply"});
  for (int i = 0; i < 6; ++i) exchanges.push_back({"tree", "tree"});
  Corpus corpus = testing::two_speaker_corpus(exchanges);
  ExhibitTable table(corpus, testing::shipped_lexicon());
  ExchangeIndex index = extract_exchanges(corpus, 1);
  PairStats stats = pair_stats(table, index.pairs[0].exchanges, MarkerFamily::Articles);
  PairAccommodation acc = pair_accommodation(stats);
  CHECK(acc.value == doctest::Approx(0.2));
}

TEST_CASE("a reply that always exhibits cannot accommodate") {
  PairAccommodation acc = pair_accommodation(make_stats(40, 17, 40, 17));
  CHECK(acc.eligible);
  CHECK(acc.value == doctest::Approx(0.0));
}

TEST_CASE("pair_accommodation eligibility needs both counts") {
  SUBCASE("too few triggers") {
    PairAccommodation acc = pair_accommodation(make_stats(30, 9, 12, 5));
    CHECK_FALSE(acc.eligible);
    CHECK(std::isnan(acc.value));
  }
  SUBCASE("too few replies") {
    PairAccommodation acc = pair_accommodation(make_stats(9, 9, 4, 3));
    CHECK_FALSE(acc.eligible);
  }
  SUBCASE("threshold is a knob") {
    CHECK(pair_accommodation(make_stats(9, 9, 4, 3), 5).eligible);
    CHECK_FALSE(pair_accommodation(make_stats(9, 4, 4, 3), 5).eligible);
  }
  SUBCASE("no triggers at all leaves the conditional undefined") {
    PairAccommodation acc = pair_accommodation(make_stats(30, 0, 12, 0));
    CHECK_FALSE(acc.eligible);
    CHECK(std::isnan(acc.p_cond));
  }
}

TEST_CASE("aggregate_accommodation averages eligible pairs only") {
  PairAccommodation a{0.1, 0.7, 0.6, true};
  PairAccommodation b{0.3, 0.9, 0.6, true};
  PairAccommodation skip{std::nan(""), std::nan(""), 0.5, false};

  FamilyAccommodation family =
      aggregate_accommodation({a, skip, b}, MarkerFamily::Quantifiers);
  CHECK(family.family == MarkerFamily::Quantifiers);
  CHECK(family.mean == doctest::Approx(0.2));
  CHECK(family.p_cond_mean == doctest::Approx(0.8));
  CHECK(family.p_base_mean == doctest::Approx(0.6));
  CHECK(family.n_pairs == 2);
  CHECK(family.pair_values.size() == 3);  // ineligible entry kept for reporting
  CHECK_FALSE(family.se.has_value());
}

TEST_CASE("aggregate_accommodation throws when nothing is eligible") {
  PairAccommodation skip{std::nan(""), std::nan(""), 0.5, false};
  CHECK_THROWS_WITH_AS(aggregate_accommodation({skip, skip}, MarkerFamily::Negations),
                       doctest::Contains("negations"), Error);
}

TEST_CASE("exchange weighting tilts the aggregate toward busy pairs") {
  PairAccommodation a{0.1, 0.7, 0.6, true};
  PairAccommodation b{0.3, 0.9, 0.6, true};
  std::vector<double> weights = {1.0, 3.0};
  FamilyAccommodation family =
      aggregate_accommodation({a, b}, MarkerFamily::Articles, weights);
  CHECK(family.mean == doctest::Approx(0.25));

  std::vector<double> wrong_length = {1.0};
  CHECK_THROWS_AS(aggregate_accommodation({a, b}, MarkerFamily::Articles, wrong_length), Error);
}

TEST_CASE("pair_correlation from sufficient statistics") {
  // indicators perfectly matched
  CHECK(pair_correlation(make_stats(10, 5, 5, 5)) == doctest::Approx(1.0));
  // the 1,1,0,0 vs 1,0,1,0 example is exactly uncorrelated
  CHECK(pair_correlation(make_stats(4, 2, 2, 1)) == doctest::Approx(0.0));
  // perfectly opposed
  CHECK(pair_correlation(make_stats(10, 5, 5, 0)) == doctest::Approx(-1.0));
  // degenerate: constant indicator on either side
  CHECK_FALSE(pair_correlation(make_stats(10, 0, 5, 0)).has_value());
  CHECK_FALSE(pair_correlation(make_stats(10, 10, 5, 5)).has_value());
  CHECK_FALSE(pair_correlation(make_stats(10, 5, 10, 5)).has_value());
}

TEST_CASE("covariance identity holds for any realizable counts") {
  rng::Stream stream(20240817);
  for (int trial = 0; trial < 500; ++trial) {
    std::int64_t n = 1 + static_cast<std::int64_t>(stream.below(60));
    std::int64_t n_trigger = 1 + static_cast<std::int64_t>(stream.below(n));
    std::int64_t n_reply = static_cast<std::int64_t>(stream.below(n + 1));
    std::int64_t low = std::max<std::int64_t>(0, n_trigger + n_reply - n);
    std::int64_t high = std::min(n_trigger, n_reply);
    std::int64_t n_both = low + static_cast<std::int64_t>(stream.below(high - low + 1));

    CovarianceCheck check = covariance_identity_check(make_stats(n, n_trigger, n_reply, n_both));
    CHECK(std::abs(check.lhs - check.rhs) <= 1e-12);
  }
}

TEST_CASE("covariance identity at the all-zero-reply corner") {
  CovarianceCheck check = covariance_identity_check(make_stats(25, 10, 0, 0));
  CHECK(check.lhs == 0.0);
  CHECK(check.rhs == 0.0);
}

TEST_CASE("covariance identity requires observed triggers and replies") {
  CHECK_THROWS_AS(covariance_identity_check(make_stats(10, 0, 3, 0)), Error);
  CHECK_THROWS_AS(covariance_identity_check(make_stats(0, 0, 0, 0)), Error);
}

TEST_CASE("accommodation values live in [-1, 1] whenever eligible") {
  rng::Stream stream(99);
  for (int trial = 0; trial < 300; ++trial) {
    std::int64_t n = 10 + static_cast<std::int64_t>(stream.below(90));
    std::int64_t n_trigger = 10 + static_cast<std::int64_t>(stream.below(n - 9));
    std::int64_t n_reply = static_cast<std::int64_t>(stream.below(n + 1));
    std::int64_t low = std::max<std::int64_t>(0, n_trigger + n_reply - n);
    std::int64_t high = std::min(n_trigger, n_reply);
    std::int64_t n_both = low + static_cast<std::int64_t>(stream.below(high - low + 1));

    PairAccommodation acc = pair_accommodation(make_stats(n, n_trigger, n_reply, n_both));
    REQUIRE(acc.eligible);
    CHECK(acc.value >= -1.0);
    CHECK(acc.value <= 1.0);
    CHECK(acc.p_cond >= 0.0);
    CHECK(acc.p_cond <= 1.0);
    CHECK(acc.p_base >= 0.0);
    CHECK(acc.p_base <= 1.0);
  }
}

TEST_CASE("counted indicators track the planted generator rates") {
  SynthSpec spec;
  spec.n_pairs = 1;
  spec.exchanges_per_pair = 10000;
  spec.q = 0.5;
  spec.p1 = 0.8;
  spec.p0 = 0.4;
  spec.seed = 7;
  Corpus corpus = synth_generate(spec);

  ExhibitTable table(corpus, testing::shipped_lexicon());
  ExchangeIndex index = extract_exchanges(corpus, 1);
  REQUIRE(index.pairs.size() == 1);
  CHECK(index.total_exchanges == 10000);

  for (MarkerFamily family : all_families()) {
    PairStats stats = pair_stats(table, index.pairs[0].exchanges, family);
    CHECK(stats.n_replies == 10000);
    // binomial 4-sigma bands around 5000, 6000 and 4000
    CHECK(stats.n_trigger > 4800);
    CHECK(stats.n_trigger < 5200);
    CHECK(stats.n_reply_exhibit > 5800);
    CHECK(stats.n_reply_exhibit < 6200);
    CHECK(stats.n_both > 3800);
    CHECK(stats.n_both < 4200);

    PairAccommodation acc = pair_accommodation(stats);
    CHECK(acc.value == doctest::Approx(0.2).epsilon(0.15));
  }
}

TEST_CASE("independent indicators show no accommodation at scale") {
  SynthSpec spec;
  spec.n_pairs = 1;
  spec.exchanges_per_pair = 20000;
  spec.q = 0.5;
  spec.p1 = 0.6;
  spec.p0 = 0.6;  // reply ignores the trigger
  spec.seed = 11;
  Corpus corpus = synth_generate(spec);

  ExhibitTable table(corpus, testing::shipped_lexicon());
  ExchangeIndex index = extract_exchanges(corpus, 1);
  PairStats stats = pair_stats(table, index.pairs[0].exchanges, MarkerFamily::Articles);
  PairAccommodation acc = pair_accommodation(stats);
  // se of the gap is ~ sqrt(.24/10000 + .24/20000) ~ 0.006
  CHECK(std::abs(acc.value) < 0.02);
}

TEST_CASE("all_pair_stats matches per-pair counting and any thread count") {
  SynthSpec spec;
  spec.n_pairs = 6;
  spec.exchanges_per_pair = 40;
  spec.seed = 3;
  Corpus corpus = synth_generate(spec);
  ExhibitTable table(corpus, testing::shipped_lexicon());
  ExchangeIndex index = extract_exchanges(corpus, 1);

  auto grid = all_pair_stats(table, index, 1);
  auto grid4 = all_pair_stats(table, index, 4);
  REQUIRE(grid.size() == kFamilyCount);
  REQUIRE(grid[0].size() == index.pairs.size());

  for (std::size_t f = 0; f < kFamilyCount; ++f) {
    for (std::size_t p = 0; p < index.pairs.size(); ++p) {
      PairStats direct =
          pair_stats(table, index.pairs[p].exchanges, all_families()[f]);
      CHECK(grid[f][p].n_replies == direct.n_replies);
      CHECK(grid[f][p].n_trigger == direct.n_trigger);
      CHECK(grid[f][p].n_reply_exhibit == direct.n_reply_exhibit);
      CHECK(grid[f][p].n_both == direct.n_both);
      CHECK(grid4[f][p].n_both == direct.n_both);
      CHECK(grid[f][p].initiator == index.pairs[p].initiator);
    }
  }
}
