#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "chameleon/coordination.hpp"
#include "chameleon/corpus.hpp"
#include "chameleon/markers.hpp"
#include "chameleon/stats.hpp"

namespace chameleon {

/// Knobs shared by every analysis. `seed` feeds the bootstrap (and shuffling
/// where applicable); every randomized step derives child seeds from it, so
/// one seed pins the whole run.
struct AnalysisOptions {
  int min_count = 10;          // eligibility threshold on n_trigger and n_replies
  int min_exchanges = 5;       // ordered pairs below this never enter an index
  std::size_t n_resamples = 1000;
  std::uint64_t seed = 0;
  int threads = 1;
  int self_gap = 2;            // self pairs are (u_i, u_{i+self_gap}), same speaker
  bool exchange_weighted = false;
};

struct PairName {
  std::string initiator;
  std::string respondent;
};

/// Per-family accommodation over the full corpus: the conditional-vs-baseline
/// bar pairs, their difference, bootstrap SE, and a paired t-test of the
/// conditional against the baseline probabilities across eligible pairs.
/// `families` is sorted by decreasing mean; families without a single
/// eligible pair land in `empty_families` instead of aborting the report.
struct ConvergenceReport {
  std::vector<PairName> pairs;                 // canonical order
  std::vector<std::vector<PairStats>> stats;   // [family][pair], canonical family order
  std::vector<FamilyAccommodation> families;   // sorted by decreasing mean
  std::vector<MarkerFamily> empty_families;
  std::size_t total_exchanges = 0;
  std::size_t removed_pairs = 0;
};

ConvergenceReport convergence_report(const Corpus& corpus, const Lexicon& lexicon,
                                     const AnalysisOptions& options);

/// Skip-distance comparison: does the trigger still work when the reply is
/// `gap` positions away instead of immediately next? Only conversations with
/// at least min_conversation_length utterances contribute, and a skipped pair
/// requires strict speaker alternation across its whole window. The gap must
/// stay odd so alternation lands the far utterance on the other speaker.
struct SkipConfig {
  int min_conversation_length = 5;
  int gap = 3;
};

void validate(const SkipConfig& config);  // throws InvalidConfig

/// Adjacent exchanges restricted to the conversations the skip analysis uses.
ExchangeIndex extract_adjacent_within(const Corpus& corpus, const SkipConfig& config,
                                      int min_exchanges);
/// (u_i, u_{i+gap}) pairs with strict alternation inside the window.
ExchangeIndex extract_skip_pairs(const Corpus& corpus, const SkipConfig& config,
                                 int min_exchanges);

struct SkipFamilyResult {
  MarkerFamily family = MarkerFamily::Articles;
  FamilyAccommodation adjacent;
  FamilyAccommodation skipped;
};

struct SkipReport {
  SkipConfig config;
  std::vector<PairName> adjacent_pairs;
  std::vector<PairName> skip_pairs;
  std::vector<SkipFamilyResult> families;  // canonical family order
  std::vector<MarkerFamily> empty_families;
  std::size_t conversations_used = 0;
};

SkipReport skip_analysis(const Corpus& corpus, const Lexicon& lexicon, const SkipConfig& config,
                         const AnalysisOptions& options);

/// Returns a corpus identical to the input except that, within each
/// conversation, each speaker's utterances are permuted among that speaker's
/// own slots. Slot speakers and per-speaker utterance multisets are
/// preserved exactly; only the pairing of trigger and reply content changes.
/// Deterministic: each conversation shuffles under a child seed derived from
/// (seed, hash of the conversation id).
Corpus shuffled_copy(const Corpus& corpus, std::uint64_t seed);

struct ShuffleFamilyResult {
  MarkerFamily family = MarkerFamily::Articles;
  FamilyAccommodation observed;
  FamilyAccommodation shuffled;
  // Welch t-test of observed vs shuffled per-pair values; empty when either
  // side has too few eligible pairs or the values are degenerate.
  std::optional<stats::TestResult> separation;
};

struct ShuffleReport {
  std::vector<PairName> pairs;  // identical for both sides: shuffling moves
                                // content, never slot speakers
  std::vector<ShuffleFamilyResult> families;
  std::vector<MarkerFamily> empty_families;
};

ShuffleReport shuffle_control(const Corpus& corpus, const Lexicon& lexicon,
                              const AnalysisOptions& options);

/// Same-speaker pairs (u_i, u_{i+gap}) pooled per character; a conversation
/// contributes only if it is long enough to contain the window.
ExchangeIndex extract_self_pairs(const Corpus& corpus, int gap, int min_exchanges);

struct SelfFamilyResult {
  MarkerFamily family = MarkerFamily::Articles;
  FamilyAccommodation self;
  FamilyAccommodation other;  // standard adjacent accommodation
};

struct SelfReport {
  std::vector<PairName> self_pairs;   // initiator == respondent
  std::vector<PairName> other_pairs;
  std::vector<SelfFamilyResult> families;
  std::vector<MarkerFamily> empty_families;
};

SelfReport self_accommodation(const Corpus& corpus, const Lexicon& lexicon,
                              const AnalysisOptions& options);

// ---------------------------------------------------------------------------
// Metadata slices
// ---------------------------------------------------------------------------

enum class SliceKind {
  InitiatorGender,
  RespondentGender,
  GenderPairType,  // MM, FM, MF, FF; first letter is the initiator
  BillingRole,     // respondent first-billed vs second-billed
  QuarrelLabel,
  All,
};

std::string_view slice_kind_name(SliceKind kind);
std::optional<SliceKind> slice_kind_from_name(std::string_view name);

enum class QuarrelLabel { Quarreling, SomeQuarreling, NoQuarreling };

std::string_view quarrel_label_name(QuarrelLabel label);
std::optional<QuarrelLabel> quarrel_label_from_name(std::string_view name);

/// One manually annotated character pair. The pair is unordered: the label
/// applies to both speaking directions within the named movie.
struct QuarrelAnnotation {
  std::string movie_id;
  std::string character_a;
  std::string character_b;
  QuarrelLabel label = QuarrelLabel::NoQuarreling;
};

/// Tab-separated sidecar file, one annotation per line:
///   movie_id <TAB> character_a <TAB> character_b <TAB> label
/// where label is quarreling | some_quarreling | no_quarreling.
/// Blank lines and lines starting with # are skipped.
std::vector<QuarrelAnnotation> load_quarrel_annotations(const std::filesystem::path& file);

struct SliceSpec {
  SliceKind kind = SliceKind::All;
  bool male_male_only = false;  // BillingRole: keep only male-male pairs
  bool merge_some = false;      // QuarrelLabel: fold some_quarreling into quarreling
  std::vector<QuarrelAnnotation> quarrels;
};

/// One cell of a slice. A cell with no assigned pairs keeps n_pairs == 0 and
/// lists all families as empty; gendered slices always materialize their full
/// cell set so absences are visible rather than silently dropped.
struct SliceCell {
  std::string label;
  std::size_t n_pairs = 0;
  std::vector<std::size_t> pair_indices;      // into SliceReport::pairs
  std::vector<FamilyAccommodation> families;  // canonical family order
  std::vector<MarkerFamily> empty_families;
};

struct CellComparison {
  std::string cell_a;
  std::string cell_b;
  MarkerFamily family = MarkerFamily::Articles;
  stats::TestResult test;  // Welch t on the two cells' eligible pair values
};

struct SliceReport {
  SliceKind kind = SliceKind::All;
  bool male_male_only = false;
  bool merge_some = false;
  std::vector<PairName> pairs;  // canonical order over the whole corpus
  std::vector<SliceCell> cells;
  // The whole-corpus reference cell. Computed from every pair directly, not
  // by averaging the cells; the weighted cell average generally differs.
  SliceCell all;
  std::vector<CellComparison> comparisons;
  std::size_t excluded_missing_metadata = 0;
  std::size_t excluded_unannotated = 0;
  std::size_t excluded_by_filter = 0;
};

SliceReport slice_analysis(const Corpus& corpus, const Lexicon& lexicon, const SliceSpec& spec,
                           const AnalysisOptions& options);

}  // namespace chameleon
