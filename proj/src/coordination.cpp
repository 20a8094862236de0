#include "chameleon/coordination.hpp"

#include <cmath>
#include <limits>

#include "chameleon/error.hpp"
#include "chameleon/parallel.hpp"

namespace chameleon {

ExhibitTable::ExhibitTable(const Corpus& corpus, const Lexicon& lexicon, int threads)
    : corpus_(&corpus) {
  auto conversations = corpus.conversations();
  masks_.resize(conversations.size());
  parallel_for(conversations.size(), threads, [&](std::size_t begin, std::size_t end) {
    for (std::size_t c = begin; c < end; ++c) {
      const auto& utterances = conversations[c].utterances;
      std::vector<std::uint16_t>& row = masks_[c];
      row.resize(utterances.size());
      for (std::size_t i = 0; i < utterances.size(); ++i) {
        row[i] = lexicon.utterance_mask(utterances[i].tokens);
      }
    }
  });
}

PairStats pair_stats(const ExhibitTable& table, std::span<const Exchange> exchanges,
                     MarkerFamily family) {
  PairStats stats;
  stats.family = family;
  if (exchanges.empty()) return stats;

  const Corpus& corpus = table.corpus();
  auto speaker_at = [&corpus](const Exchange& e, std::int32_t position) {
    return corpus.conversation(e.conversation).utterances[static_cast<std::size_t>(position)].speaker;
  };
  stats.initiator = speaker_at(exchanges[0], exchanges[0].trigger_pos);
  stats.respondent = speaker_at(exchanges[0], exchanges[0].reply_pos);

  for (const Exchange& exchange : exchanges) {
    if (speaker_at(exchange, exchange.trigger_pos) != stats.initiator ||
        speaker_at(exchange, exchange.reply_pos) != stats.respondent) {
      fail(ErrorCode::MixedPairs, "exchange list spans more than one ordered speaker pair");
    }
    bool trigger = table.exhibits(exchange.conversation, exchange.trigger_pos, family);
    bool reply = table.exhibits(exchange.conversation, exchange.reply_pos, family);
    ++stats.n_replies;
    stats.n_trigger += trigger;
    stats.n_reply_exhibit += reply;
    stats.n_both += trigger && reply;
  }
  return stats;
}

PairAccommodation pair_accommodation(const PairStats& stats, int min_count) {
  PairAccommodation acc;
  acc.eligible = stats.n_trigger >= min_count && stats.n_replies >= min_count;
  acc.p_cond = stats.n_trigger > 0
                   ? static_cast<double>(stats.n_both) / static_cast<double>(stats.n_trigger)
                   : std::numeric_limits<double>::quiet_NaN();
  acc.p_base = stats.n_replies > 0
                   ? static_cast<double>(stats.n_reply_exhibit) / static_cast<double>(stats.n_replies)
                   : std::numeric_limits<double>::quiet_NaN();
  acc.value = acc.eligible ? acc.p_cond - acc.p_base : std::numeric_limits<double>::quiet_NaN();
  return acc;
}

FamilyAccommodation aggregate_accommodation(std::vector<PairAccommodation> pair_values,
                                            MarkerFamily family, std::span<const double> weights) {
  if (!weights.empty() && weights.size() != pair_values.size()) {
    fail(ErrorCode::LengthMismatch, "weights must align with pair values");
  }

  FamilyAccommodation aggregate;
  aggregate.family = family;
  double value_sum = 0.0, cond_sum = 0.0, base_sum = 0.0, weight_sum = 0.0;
  for (std::size_t i = 0; i < pair_values.size(); ++i) {
    const PairAccommodation& pair = pair_values[i];
    if (!pair.eligible) continue;
    double w = weights.empty() ? 1.0 : weights[i];
    value_sum += w * pair.value;
    cond_sum += w * pair.p_cond;
    base_sum += w * pair.p_base;
    weight_sum += w;
    ++aggregate.n_pairs;
  }
  if (aggregate.n_pairs == 0 || weight_sum == 0.0) {
    fail(ErrorCode::NoEligiblePairs,
         "no eligible pairs for family " + std::string(family_name(family)));
  }
  aggregate.mean = value_sum / weight_sum;
  aggregate.p_cond_mean = cond_sum / weight_sum;
  aggregate.p_base_mean = base_sum / weight_sum;
  aggregate.pair_values = std::move(pair_values);
  return aggregate;
}

std::optional<double> pair_correlation(const PairStats& stats) {
  if (stats.n_replies == 0) return std::nullopt;
  double n = static_cast<double>(stats.n_replies);
  double mx = static_cast<double>(stats.n_trigger) / n;
  double my = static_cast<double>(stats.n_reply_exhibit) / n;
  double vx = mx * (1.0 - mx);
  double vy = my * (1.0 - my);
  if (vx == 0.0 || vy == 0.0) return std::nullopt;
  double cov = static_cast<double>(stats.n_both) / n - mx * my;
  return cov / std::sqrt(vx * vy);
}

CovarianceCheck covariance_identity_check(const PairStats& stats) {
  if (stats.n_replies <= 0 || stats.n_trigger <= 0) {
    fail(ErrorCode::InvalidConfig, "covariance identity needs n_replies > 0 and n_trigger > 0");
  }
  double n = static_cast<double>(stats.n_replies);
  double trigger_rate = static_cast<double>(stats.n_trigger) / n;
  double reply_rate = static_cast<double>(stats.n_reply_exhibit) / n;
  double accommodation =
      static_cast<double>(stats.n_both) / static_cast<double>(stats.n_trigger) - reply_rate;

  CovarianceCheck check;
  check.lhs = static_cast<double>(stats.n_both) / n - trigger_rate * reply_rate;
  check.rhs = accommodation * trigger_rate;
  return check;
}

std::vector<std::vector<PairStats>> all_pair_stats(const ExhibitTable& table,
                                                   const ExchangeIndex& index, int threads) {
  std::vector<std::vector<PairStats>> stats(kFamilyCount);
  for (auto& row : stats) row.resize(index.pairs.size());
  parallel_for(index.pairs.size(), threads, [&](std::size_t begin, std::size_t end) {
    for (std::size_t p = begin; p < end; ++p) {
      for (MarkerFamily family : all_families()) {
        stats[static_cast<std::size_t>(family)][p] =
            pair_stats(table, index.pairs[p].exchanges, family);
      }
    }
  });
  return stats;
}

}  // namespace chameleon
