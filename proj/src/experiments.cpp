#include "chameleon/experiments.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <sstream>
#include <utility>

#include "chameleon/error.hpp"
#include "chameleon/parallel.hpp"
#include "chameleon/rng.hpp"

namespace chameleon {

namespace {

std::vector<PairName> pair_names(const Corpus& corpus, const ExchangeIndex& index) {
  std::vector<PairName> names;
  names.reserve(index.pairs.size());
  for (const PairExchanges& pair : index.pairs) {
    names.push_back(
        PairName{corpus.character(pair.initiator).id, corpus.character(pair.respondent).id});
  }
  return names;
}

/// Aggregates one family over a pair subset (empty subset = every pair),
/// attaching a bootstrap SE when at least two pairs are eligible and, on
/// request, the paired conditional-vs-baseline t-test. Returns nothing when
/// no pair is eligible.
std::optional<FamilyAccommodation> aggregate_over(const std::vector<PairStats>& row,
                                                  std::span<const std::size_t> subset,
                                                  MarkerFamily family,
                                                  const AnalysisOptions& options,
                                                  std::uint64_t seed, bool with_significance) {
  std::vector<PairAccommodation> accommodations;
  std::vector<double> weights;
  auto consider = [&](const PairStats& stats) {
    accommodations.push_back(pair_accommodation(stats, options.min_count));
    if (options.exchange_weighted) weights.push_back(static_cast<double>(stats.n_replies));
  };
  if (subset.empty()) {
    for (const PairStats& stats : row) consider(stats);
  } else {
    for (std::size_t index : subset) consider(row[index]);
  }

  FamilyAccommodation aggregate;
  try {
    aggregate = aggregate_accommodation(std::move(accommodations), family, weights);
  } catch (const Error& e) {
    if (e.code() == ErrorCode::NoEligiblePairs) return std::nullopt;
    throw;
  }

  std::vector<double> values, cond, base;
  for (const PairAccommodation& pair : aggregate.pair_values) {
    if (!pair.eligible) continue;
    values.push_back(pair.value);
    cond.push_back(pair.p_cond);
    base.push_back(pair.p_base);
  }
  if (values.size() >= 2) {
    aggregate.se =
        stats::bootstrap_se(values, options.n_resamples, seed, options.threads).se;
    if (with_significance) {
      try {
        aggregate.significance = stats::paired_t_test(cond, base);
      } catch (const Error& e) {
        if (e.code() != ErrorCode::DegenerateVariance) throw;
        // identical conditional and baseline probabilities on every pair:
        // no test to report
      }
    }
  }
  return aggregate;
}

std::vector<double> eligible_values(const FamilyAccommodation& aggregate) {
  std::vector<double> values;
  for (const PairAccommodation& pair : aggregate.pair_values) {
    if (pair.eligible) values.push_back(pair.value);
  }
  return values;
}

std::optional<stats::TestResult> welch_if_possible(std::span<const double> a,
                                                   std::span<const double> b) {
  if (a.size() < 2 || b.size() < 2) return std::nullopt;
  try {
    return stats::independent_t_test(a, b);
  } catch (const Error& e) {
    if (e.code() == ErrorCode::DegenerateVariance) return std::nullopt;
    throw;
  }
}

}  // namespace

ConvergenceReport convergence_report(const Corpus& corpus, const Lexicon& lexicon,
                                     const AnalysisOptions& options) {
  ExchangeIndex index = extract_exchanges(corpus, options.min_exchanges);
  ExhibitTable table(corpus, lexicon, options.threads);

  ConvergenceReport report;
  report.pairs = pair_names(corpus, index);
  report.total_exchanges = index.total_exchanges;
  report.removed_pairs = index.removed_pairs;
  report.stats = all_pair_stats(table, index, options.threads);

  for (MarkerFamily family : all_families()) {
    auto f = static_cast<std::size_t>(family);
    auto aggregate = aggregate_over(report.stats[f], {}, family, options,
                                    rng::derive(options.seed, f), true);
    if (aggregate) {
      report.families.push_back(std::move(*aggregate));
    } else {
      report.empty_families.push_back(family);
    }
  }
  std::stable_sort(report.families.begin(), report.families.end(),
                   [](const FamilyAccommodation& a, const FamilyAccommodation& b) {
                     return a.mean > b.mean;
                   });
  return report;
}

// ---------------------------------------------------------------------------
// Skip distance
// ---------------------------------------------------------------------------

void validate(const SkipConfig& config) {
  if (config.gap < 1 || config.gap % 2 == 0) {
    fail(ErrorCode::InvalidConfig,
         "skip gap must be odd so alternation puts the far utterance on the other speaker (got " +
             std::to_string(config.gap) + ")");
  }
  if (config.min_conversation_length < config.gap + 2) {
    fail(ErrorCode::InvalidConfig, "min conversation length must be at least gap + 2 (got " +
                                       std::to_string(config.min_conversation_length) + " for gap " +
                                       std::to_string(config.gap) + ")");
  }
}

ExchangeIndex extract_adjacent_within(const Corpus& corpus, const SkipConfig& config,
                                      int min_exchanges) {
  validate(config);
  std::vector<Exchange> exchanges;
  for (std::size_t c = 0; c < corpus.conversations().size(); ++c) {
    const auto& utterances = corpus.conversations()[c].utterances;
    if (utterances.size() < static_cast<std::size_t>(config.min_conversation_length)) continue;
    for (std::size_t i = 0; i + 1 < utterances.size(); ++i) {
      if (utterances[i].speaker == utterances[i + 1].speaker) continue;
      exchanges.push_back(Exchange{static_cast<std::int32_t>(c), static_cast<std::int32_t>(i),
                                   static_cast<std::int32_t>(i + 1)});
    }
  }
  return group_exchanges(corpus, std::move(exchanges), min_exchanges, 1);
}

ExchangeIndex extract_skip_pairs(const Corpus& corpus, const SkipConfig& config,
                                 int min_exchanges) {
  validate(config);
  auto gap = static_cast<std::size_t>(config.gap);
  std::vector<Exchange> exchanges;
  for (std::size_t c = 0; c < corpus.conversations().size(); ++c) {
    const auto& utterances = corpus.conversations()[c].utterances;
    if (utterances.size() < static_cast<std::size_t>(config.min_conversation_length)) continue;
    for (std::size_t i = 0; i + gap < utterances.size(); ++i) {
      bool alternating = true;
      for (std::size_t j = i; j < i + gap; ++j) {
        if (utterances[j].speaker == utterances[j + 1].speaker) {
          alternating = false;
          break;
        }
      }
      if (!alternating) continue;
      exchanges.push_back(Exchange{static_cast<std::int32_t>(c), static_cast<std::int32_t>(i),
                                   static_cast<std::int32_t>(i + gap)});
    }
  }
  return group_exchanges(corpus, std::move(exchanges), min_exchanges, config.gap);
}

SkipReport skip_analysis(const Corpus& corpus, const Lexicon& lexicon, const SkipConfig& config,
                         const AnalysisOptions& options) {
  validate(config);

  SkipReport report;
  report.config = config;
  for (const Conversation& conversation : corpus.conversations()) {
    if (conversation.utterances.size() >=
        static_cast<std::size_t>(config.min_conversation_length)) {
      ++report.conversations_used;
    }
  }

  ExchangeIndex adjacent_index = extract_adjacent_within(corpus, config, options.min_exchanges);
  ExchangeIndex skip_index = extract_skip_pairs(corpus, config, options.min_exchanges);
  ExhibitTable table(corpus, lexicon, options.threads);
  auto adjacent_stats = all_pair_stats(table, adjacent_index, options.threads);
  auto skip_stats = all_pair_stats(table, skip_index, options.threads);
  report.adjacent_pairs = pair_names(corpus, adjacent_index);
  report.skip_pairs = pair_names(corpus, skip_index);

  for (MarkerFamily family : all_families()) {
    auto f = static_cast<std::size_t>(family);
    std::uint64_t family_seed = rng::derive(options.seed, f);
    auto adjacent = aggregate_over(adjacent_stats[f], {}, family, options,
                                   rng::derive(family_seed, 0), false);
    auto skipped =
        aggregate_over(skip_stats[f], {}, family, options, rng::derive(family_seed, 1), false);
    if (adjacent && skipped) {
      report.families.push_back(
          SkipFamilyResult{family, std::move(*adjacent), std::move(*skipped)});
    } else {
      report.empty_families.push_back(family);
    }
  }
  if (report.families.empty()) {
    fail(ErrorCode::NoEligiblePairs, "no family has eligible pairs on both skip-analysis sides");
  }
  return report;
}

// ---------------------------------------------------------------------------
// Shuffle control
// ---------------------------------------------------------------------------

Corpus shuffled_copy(const Corpus& corpus, std::uint64_t seed) {
  Corpus::Builder builder(corpus.provenance());
  for (const Movie& movie : corpus.movies()) {
    builder.add_movie(movie.id, movie.title, movie.year, movie.genres);
  }
  for (const Character& character : corpus.characters()) {
    builder.add_character(character.id, character.name, corpus.movie(character.movie).id,
                          character.gender, character.credit_position);
  }
  for (const Conversation& conversation : corpus.conversations()) {
    rng::Stream stream(rng::derive(seed, rng::fnv1a64(conversation.id)));

    // content[j] names the utterance whose id/text land in slot j
    std::vector<std::size_t> content(conversation.utterances.size());
    for (std::size_t j = 0; j < content.size(); ++j) content[j] = j;
    for (std::int32_t participant : conversation.participants) {
      std::vector<std::size_t> slots;
      for (std::size_t j = 0; j < conversation.utterances.size(); ++j) {
        if (conversation.utterances[j].speaker == participant) slots.push_back(j);
      }
      std::vector<std::size_t> permuted = slots;
      stream.shuffle(permuted);
      for (std::size_t k = 0; k < slots.size(); ++k) content[slots[k]] = permuted[k];
    }

    std::vector<Corpus::Builder::Line> lines;
    lines.reserve(conversation.utterances.size());
    for (std::size_t j = 0; j < conversation.utterances.size(); ++j) {
      const Utterance& source = conversation.utterances[content[j]];
      lines.push_back(Corpus::Builder::Line{
          source.id, corpus.character(conversation.utterances[j].speaker).id, source.text});
    }
    builder.add_conversation(conversation.id, corpus.movie(conversation.movie).id,
                             {corpus.character(conversation.participants[0]).id,
                              corpus.character(conversation.participants[1]).id},
                             std::move(lines));
  }
  return builder.build(false);
}

ShuffleReport shuffle_control(const Corpus& corpus, const Lexicon& lexicon,
                              const AnalysisOptions& options) {
  ExchangeIndex index = extract_exchanges(corpus, options.min_exchanges);
  ExhibitTable table(corpus, lexicon, options.threads);
  auto observed_stats = all_pair_stats(table, index, options.threads);

  Corpus shuffled = shuffled_copy(corpus, rng::derive(options.seed, rng::fnv1a64("shuffle")));
  ExchangeIndex shuffled_index = extract_exchanges(shuffled, options.min_exchanges);
  ExhibitTable shuffled_table(shuffled, lexicon, options.threads);
  auto shuffled_stats = all_pair_stats(shuffled_table, shuffled_index, options.threads);

  ShuffleReport report;
  report.pairs = pair_names(corpus, index);
  for (MarkerFamily family : all_families()) {
    auto f = static_cast<std::size_t>(family);
    std::uint64_t family_seed = rng::derive(options.seed, f);
    auto observed = aggregate_over(observed_stats[f], {}, family, options,
                                   rng::derive(family_seed, 0), false);
    auto shuffled_side = aggregate_over(shuffled_stats[f], {}, family, options,
                                        rng::derive(family_seed, 1), false);
    if (observed && shuffled_side) {
      ShuffleFamilyResult result;
      result.family = family;
      result.separation =
          welch_if_possible(eligible_values(*observed), eligible_values(*shuffled_side));
      result.observed = std::move(*observed);
      result.shuffled = std::move(*shuffled_side);
      report.families.push_back(std::move(result));
    } else {
      report.empty_families.push_back(family);
    }
  }
  return report;
}

// ---------------------------------------------------------------------------
// Self-coordination
// ---------------------------------------------------------------------------

ExchangeIndex extract_self_pairs(const Corpus& corpus, int gap, int min_exchanges) {
  if (gap < 1) fail(ErrorCode::InvalidConfig, "self gap must be >= 1");
  auto distance = static_cast<std::size_t>(gap);
  std::vector<Exchange> exchanges;
  for (std::size_t c = 0; c < corpus.conversations().size(); ++c) {
    const auto& utterances = corpus.conversations()[c].utterances;
    for (std::size_t i = 0; i + distance < utterances.size(); ++i) {
      if (utterances[i].speaker != utterances[i + distance].speaker) continue;
      exchanges.push_back(Exchange{static_cast<std::int32_t>(c), static_cast<std::int32_t>(i),
                                   static_cast<std::int32_t>(i + distance)});
    }
  }
  return group_exchanges(corpus, std::move(exchanges), min_exchanges, gap);
}

SelfReport self_accommodation(const Corpus& corpus, const Lexicon& lexicon,
                              const AnalysisOptions& options) {
  ExchangeIndex self_index = extract_self_pairs(corpus, options.self_gap, options.min_exchanges);
  ExchangeIndex other_index = extract_exchanges(corpus, options.min_exchanges);
  ExhibitTable table(corpus, lexicon, options.threads);
  auto self_stats = all_pair_stats(table, self_index, options.threads);
  auto other_stats = all_pair_stats(table, other_index, options.threads);

  SelfReport report;
  report.self_pairs = pair_names(corpus, self_index);
  report.other_pairs = pair_names(corpus, other_index);
  for (MarkerFamily family : all_families()) {
    auto f = static_cast<std::size_t>(family);
    std::uint64_t family_seed = rng::derive(options.seed, f);
    auto self_side =
        aggregate_over(self_stats[f], {}, family, options, rng::derive(family_seed, 0), false);
    auto other_side =
        aggregate_over(other_stats[f], {}, family, options, rng::derive(family_seed, 1), false);
    if (self_side && other_side) {
      report.families.push_back(
          SelfFamilyResult{family, std::move(*self_side), std::move(*other_side)});
    } else {
      report.empty_families.push_back(family);
    }
  }
  if (report.families.empty()) {
    fail(ErrorCode::NoEligiblePairs, "no family has eligible self and other pairs");
  }
  return report;
}

// ---------------------------------------------------------------------------
// Metadata slices
// ---------------------------------------------------------------------------

std::string_view slice_kind_name(SliceKind kind) {
  switch (kind) {
    case SliceKind::InitiatorGender: return "initiator_gender";
    case SliceKind::RespondentGender: return "respondent_gender";
    case SliceKind::GenderPairType: return "gender_pair";
    case SliceKind::BillingRole: return "billing";
    case SliceKind::QuarrelLabel: return "quarrel";
    default: return "all";
  }
}

std::optional<SliceKind> slice_kind_from_name(std::string_view name) {
  for (SliceKind kind :
       {SliceKind::InitiatorGender, SliceKind::RespondentGender, SliceKind::GenderPairType,
        SliceKind::BillingRole, SliceKind::QuarrelLabel, SliceKind::All}) {
    if (slice_kind_name(kind) == name) return kind;
  }
  return std::nullopt;
}

std::string_view quarrel_label_name(QuarrelLabel label) {
  switch (label) {
    case QuarrelLabel::Quarreling: return "quarreling";
    case QuarrelLabel::SomeQuarreling: return "some_quarreling";
    default: return "no_quarreling";
  }
}

std::optional<QuarrelLabel> quarrel_label_from_name(std::string_view name) {
  for (QuarrelLabel label :
       {QuarrelLabel::Quarreling, QuarrelLabel::SomeQuarreling, QuarrelLabel::NoQuarreling}) {
    if (quarrel_label_name(label) == name) return label;
  }
  return std::nullopt;
}

std::vector<QuarrelAnnotation> load_quarrel_annotations(const std::filesystem::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) fail(ErrorCode::MissingFile, "cannot open " + file.string());

  std::vector<QuarrelAnnotation> annotations;
  std::string line;
  std::size_t line_number = 0;
  while (std::getline(in, line)) {
    ++line_number;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;

    std::vector<std::string> fields;
    std::size_t start = 0;
    while (true) {
      std::size_t tab = line.find('\t', start);
      if (tab == std::string::npos) {
        fields.push_back(line.substr(start));
        break;
      }
      fields.push_back(line.substr(start, tab - start));
      start = tab + 1;
    }
    std::string where = file.filename().string() + ":" + std::to_string(line_number);
    if (fields.size() != 4) {
      fail(ErrorCode::SyntaxError,
           where + ": expected movie_id, character_a, character_b, label");
    }
    auto label = quarrel_label_from_name(fields[3]);
    if (!label) {
      fail(ErrorCode::SyntaxError, where + ": unknown label `" + fields[3] +
                                       "` (expected quarreling | some_quarreling | no_quarreling)");
    }
    annotations.push_back(QuarrelAnnotation{fields[0], fields[1], fields[2], *label});
  }
  return annotations;
}

namespace {

std::vector<std::string> cell_labels(const SliceSpec& spec) {
  switch (spec.kind) {
    case SliceKind::InitiatorGender:
    case SliceKind::RespondentGender: return {"male", "female"};
    case SliceKind::GenderPairType: return {"MM", "FM", "MF", "FF"};
    case SliceKind::BillingRole: return {"lead_respondent", "second_respondent"};
    case SliceKind::QuarrelLabel:
      if (spec.merge_some) return {"quarreling", "no_quarreling"};
      return {"quarreling", "some_quarreling", "no_quarreling"};
    default: return {"all"};
  }
}

}  // namespace

SliceReport slice_analysis(const Corpus& corpus, const Lexicon& lexicon, const SliceSpec& spec,
                           const AnalysisOptions& options) {
  if (spec.kind == SliceKind::QuarrelLabel && spec.quarrels.empty()) {
    fail(ErrorCode::MissingMetadata, "quarrel slice needs a quarrel annotation file");
  }

  // annotation lookup keyed by the unordered character pair
  std::map<std::pair<std::int32_t, std::int32_t>, QuarrelLabel> quarrel_by_pair;
  for (const QuarrelAnnotation& annotation : spec.quarrels) {
    auto movie = corpus.find_movie(annotation.movie_id);
    if (!movie) {
      fail(ErrorCode::UnresolvedReference,
           "quarrel annotation references unknown movie " + annotation.movie_id);
    }
    auto a = corpus.find_character(annotation.character_a);
    auto b = corpus.find_character(annotation.character_b);
    if (!a || !b) {
      fail(ErrorCode::UnresolvedReference, "quarrel annotation references unknown character " +
                                               (!a ? annotation.character_a : annotation.character_b));
    }
    if (corpus.character(*a).movie != *movie || corpus.character(*b).movie != *movie) {
      fail(ErrorCode::UnresolvedReference, "quarrel annotation pair " + annotation.character_a +
                                               ", " + annotation.character_b +
                                               " does not belong to movie " + annotation.movie_id);
    }
    quarrel_by_pair[std::minmax(*a, *b)] = annotation.label;
  }

  ExchangeIndex index = extract_exchanges(corpus, options.min_exchanges);
  ExhibitTable table(corpus, lexicon, options.threads);
  auto stats = all_pair_stats(table, index, options.threads);

  SliceReport report;
  report.kind = spec.kind;
  report.male_male_only = spec.male_male_only;
  report.merge_some = spec.merge_some;
  report.pairs = pair_names(corpus, index);

  std::vector<std::string> labels = cell_labels(spec);
  std::map<std::string, std::size_t> cell_index;
  for (const std::string& label : labels) {
    cell_index.emplace(label, report.cells.size());
    SliceCell cell;
    cell.label = label;
    report.cells.push_back(std::move(cell));
  }

  auto gender_letter = [](Gender gender) { return gender == Gender::Male ? 'M' : 'F'; };
  for (std::size_t p = 0; p < index.pairs.size(); ++p) {
    const Character& initiator = corpus.character(index.pairs[p].initiator);
    const Character& respondent = corpus.character(index.pairs[p].respondent);
    std::string label;
    switch (spec.kind) {
      case SliceKind::InitiatorGender:
      case SliceKind::RespondentGender: {
        Gender gender =
            spec.kind == SliceKind::InitiatorGender ? initiator.gender : respondent.gender;
        if (gender == Gender::Unknown) {
          ++report.excluded_missing_metadata;
          continue;
        }
        label = gender == Gender::Male ? "male" : "female";
        break;
      }
      case SliceKind::GenderPairType: {
        if (initiator.gender == Gender::Unknown || respondent.gender == Gender::Unknown) {
          ++report.excluded_missing_metadata;
          continue;
        }
        label = {gender_letter(initiator.gender), gender_letter(respondent.gender)};
        break;
      }
      case SliceKind::BillingRole: {
        auto ci = initiator.credit_position;
        auto cr = respondent.credit_position;
        bool billed = ci && cr && ((*ci == 1 && *cr == 2) || (*ci == 2 && *cr == 1));
        if (!billed) {
          ++report.excluded_missing_metadata;
          continue;
        }
        if (spec.male_male_only &&
            (initiator.gender != Gender::Male || respondent.gender != Gender::Male)) {
          ++report.excluded_by_filter;
          continue;
        }
        label = *cr == 1 ? "lead_respondent" : "second_respondent";
        break;
      }
      case SliceKind::QuarrelLabel: {
        auto it = quarrel_by_pair.find(std::minmax(index.pairs[p].initiator,
                                                   index.pairs[p].respondent));
        if (it == quarrel_by_pair.end()) {
          ++report.excluded_unannotated;
          continue;
        }
        QuarrelLabel value = it->second;
        if (spec.merge_some && value == QuarrelLabel::SomeQuarreling) {
          value = QuarrelLabel::Quarreling;
        }
        label = quarrel_label_name(value);
        break;
      }
      default: label = "all"; break;
    }
    SliceCell& cell = report.cells[cell_index.at(label)];
    cell.pair_indices.push_back(p);
    ++cell.n_pairs;
  }

  auto fill_cell = [&](SliceCell& cell) {
    for (MarkerFamily family : all_families()) {
      auto f = static_cast<std::size_t>(family);
      std::uint64_t cell_seed = rng::derive(rng::derive(options.seed, f), rng::fnv1a64(cell.label));
      // aggregate_over reads an empty subset as "every pair"; a cell that
      // received no pairs must stay empty instead.
      std::optional<FamilyAccommodation> aggregate;
      if (!cell.pair_indices.empty()) {
        aggregate = aggregate_over(stats[f], cell.pair_indices, family, options, cell_seed, false);
      }
      if (aggregate) {
        cell.families.push_back(std::move(*aggregate));
      } else {
        cell.empty_families.push_back(family);
      }
    }
  };
  for (SliceCell& cell : report.cells) fill_cell(cell);

  report.all.label = "all";
  report.all.n_pairs = index.pairs.size();
  report.all.pair_indices.resize(index.pairs.size());
  for (std::size_t p = 0; p < index.pairs.size(); ++p) report.all.pair_indices[p] = p;
  fill_cell(report.all);

  bool anything = !report.all.families.empty();
  for (const SliceCell& cell : report.cells) anything = anything || !cell.families.empty();
  if (!anything) {
    fail(ErrorCode::EmptyCell, "every cell of the " + std::string(slice_kind_name(spec.kind)) +
                                   " slice is empty; nothing to report");
  }

  for (MarkerFamily family : all_families()) {
    for (std::size_t i = 0; i < report.cells.size(); ++i) {
      for (std::size_t j = i + 1; j < report.cells.size(); ++j) {
        auto find_family = [family](const SliceCell& cell) -> const FamilyAccommodation* {
          for (const FamilyAccommodation& aggregate : cell.families) {
            if (aggregate.family == family) return &aggregate;
          }
          return nullptr;
        };
        const FamilyAccommodation* a = find_family(report.cells[i]);
        const FamilyAccommodation* b = find_family(report.cells[j]);
        if (!a || !b) continue;
        auto test = welch_if_possible(eligible_values(*a), eligible_values(*b));
        if (test) {
          report.comparisons.push_back(
              CellComparison{report.cells[i].label, report.cells[j].label, family, *test});
        }
      }
    }
  }
  return report;
}

}  // namespace chameleon
