#pragma once

#include <cstdint>
#include <string_view>
#include <vector>

#include "chameleon/corpus.hpp"
#include "chameleon/markers.hpp"

namespace chameleon {

/// Overrides the trigger/reply probabilities for pairs whose (initiator,
/// respondent) genders match exactly. Used to plant per-cell effects that a
/// gender slice should recover.
struct CellOverride {
  Gender initiator = Gender::Unknown;
  Gender respondent = Gender::Unknown;
  double q = 0.5;
  double p1 = 0.8;
  double p0 = 0.4;
};

/// Ground-truth generator parameters. Every conversation alternates speakers
/// A, B, A, B, ... For each marker family independently, A's utterances
/// exhibit the family with probability q; B's utterances exhibit it with
/// probability p1 when the utterance B replies to exhibited it and p0
/// otherwise. A's utterances never react to B, so reply-direction
/// accommodation is planted only for A -> B.
///
/// With conversation_length == 2 (the default) every adjacent exchange in
/// the corpus is a planted A -> B exchange, so the pooled estimate matches
/// the closed form expected_accommodation(q, p1, p0). Longer conversations
/// add null B -> A pairs that dilute a pooled mean; tests over longer
/// conversations must compare per-direction.
///
/// style_mode replaces triggering entirely: each (speaker, conversation)
/// draws a per-conversation exhibit rate from {style_low, style_high} and
/// every utterance samples independently at that rate. That plants
/// self-consistency (positive self-coordination) with no cross-speaker
/// effect.
struct SynthSpec {
  int n_pairs = 200;
  int exchanges_per_pair = 100;  // planted A -> B exchanges, rounded up to fill conversations
  double q = 0.5;
  double p1 = 0.8;
  double p0 = 0.4;
  int conversation_length = 2;  // utterances per conversation, >= 2
  std::uint64_t seed = 0;
  bool assign_genders = true;  // cycle MM, FM, MF, FF over pair index; else all Unknown
  std::vector<CellOverride> overrides;
  bool style_mode = false;
  double style_low = 0.2;
  double style_high = 0.8;
};

/// Closed form for the planted immediate accommodation:
///   p1 - (q * p1 + (1 - q) * p0)
double expected_accommodation(double q, double p1, double p0);

/// Single word that exhibits exactly this family under the shipped lexicon
/// (and no other family), so generated text hits the intended indicator bits.
std::string_view synth_marker_word(MarkerFamily family);

/// A word outside every family, used when an utterance exhibits nothing.
std::string_view synth_filler_word();

/// Builds the synthetic corpus. Each pair lives in its own movie with
/// characters A (credit 1) and B (credit 2). Deterministic in spec.seed.
/// Throws InvalidProbability for out-of-range probabilities and
/// InvalidConfig for impossible sizes.
Corpus synth_generate(const SynthSpec& spec);

}  // namespace chameleon
