#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "chameleon/corpus.hpp"
#include "chameleon/markers.hpp"
#include "chameleon/stats.hpp"

namespace chameleon {

/// Per-utterance family bitmasks for one corpus under one lexicon, computed
/// once so the per-pair counting loops stay cheap. Indexed by conversation
/// position and utterance position within it.
class ExhibitTable {
 public:
  ExhibitTable(const Corpus& corpus, const Lexicon& lexicon, int threads = 1);

  std::uint16_t mask(std::int32_t conversation, std::int32_t position) const {
    return masks_[static_cast<std::size_t>(conversation)][static_cast<std::size_t>(position)];
  }
  bool exhibits(std::int32_t conversation, std::int32_t position, MarkerFamily family) const {
    return (mask(conversation, position) >> static_cast<int>(family)) & 1u;
  }
  const Corpus& corpus() const { return *corpus_; }

 private:
  const Corpus* corpus_;
  std::vector<std::vector<std::uint16_t>> masks_;
};

/// Sufficient statistics for one ordered speaker pair and one marker family:
/// how many replies B gave to A, how often A's trigger showed the family,
/// how often B's reply did, and how often both did at once.
struct PairStats {
  std::int32_t initiator = -1;
  std::int32_t respondent = -1;
  MarkerFamily family = MarkerFamily::Articles;
  std::int64_t n_replies = 0;
  std::int64_t n_trigger = 0;
  std::int64_t n_reply_exhibit = 0;
  std::int64_t n_both = 0;
};

/// Counts exhibit indicators over a pair's exchanges. Every exchange must
/// belong to the same ordered (initiator, respondent) speaker pair; exchanges
/// spanning several pairs raise MixedPairs.
PairStats pair_stats(const ExhibitTable& table, std::span<const Exchange> exchanges,
                     MarkerFamily family);

/// The immediate accommodation measure for one pair and family:
///   value = P(reply exhibits | trigger exhibited) - P(reply exhibits)
/// estimated as n_both/n_trigger - n_reply_exhibit/n_replies. Negative values
/// mean divergence. Pairs where either denominator is below min_count are
/// marked ineligible (value NaN) and excluded from aggregates.
struct PairAccommodation {
  double value = 0.0;
  double p_cond = 0.0;
  double p_base = 0.0;
  bool eligible = false;
};

PairAccommodation pair_accommodation(const PairStats& stats, int min_count = 10);

/// Family-level aggregate: unweighted mean of eligible pair values, plus the
/// two component means feeding the conditional-vs-baseline bar pairs.
/// `se` and `significance` stay empty here; the experiment layer fills them.
struct FamilyAccommodation {
  MarkerFamily family = MarkerFamily::Articles;
  double mean = 0.0;
  double p_cond_mean = 0.0;
  double p_base_mean = 0.0;
  std::vector<PairAccommodation> pair_values;  // aligned with the input, ineligible included
  std::size_t n_pairs = 0;                     // eligible pairs only
  std::optional<double> se;
  std::optional<stats::TestResult> significance;
};

/// `weights`, when nonempty, must align with pair_values and switches on the
/// exchange-weighted mode (weight each eligible pair by its reply count);
/// the default is the plain unweighted mean. Throws NoEligiblePairs when no
/// pair clears the threshold.
FamilyAccommodation aggregate_accommodation(std::vector<PairAccommodation> pair_values,
                                            MarkerFamily family,
                                            std::span<const double> weights = {});

/// Pearson correlation of the two binary indicator sequences, computed from
/// the sufficient statistics alone. Empty when either indicator is constant
/// across the pair's exchanges.
std::optional<double> pair_correlation(const PairStats& stats);

/// Both sides of the covariance identity
///   cov(trigger, reply) = accommodation * P(trigger exhibits)
/// with population (divisor n) covariance on the left. The two must agree to
/// 1e-12 for any counts; tests assert that. Needs n_replies > 0 and
/// n_trigger > 0.
struct CovarianceCheck {
  double lhs = 0.0;  // empirical covariance of the indicator sequences
  double rhs = 0.0;  // accommodation value times trigger rate
};

CovarianceCheck covariance_identity_check(const PairStats& stats);

/// Stats for every (family, pair) cell of an exchange index, pairs kept in
/// the index's canonical order. Indexed [family][pair]. Pair rows are written
/// to disjoint slots, so the result is identical for any thread count.
std::vector<std::vector<PairStats>> all_pair_stats(const ExhibitTable& table,
                                                   const ExchangeIndex& index, int threads = 1);

}  // namespace chameleon
