#include "chameleon/synth.hpp"

#include <array>
#include <string>

#include "chameleon/error.hpp"
#include "chameleon/rng.hpp"

namespace chameleon {

namespace {

void check_probability(double value, const char* name) {
  if (!(value >= 0.0 && value <= 1.0)) {
    fail(ErrorCode::InvalidProbability, std::string(name) + " must be in [0, 1]");
  }
}

std::string text_for_mask(std::uint16_t mask) {
  if (mask == 0) return std::string(synth_filler_word());
  std::string text;
  for (MarkerFamily family : all_families()) {
    if ((mask >> static_cast<int>(family)) & 1u) {
      if (!text.empty()) text += ' ';
      text += synth_marker_word(family);
    }
  }
  return text;
}

}  // namespace

double expected_accommodation(double q, double p1, double p0) {
  return p1 - (q * p1 + (1.0 - q) * p0);
}

std::string_view synth_marker_word(MarkerFamily family) {
  switch (family) {
    case MarkerFamily::Articles: return "the";
    case MarkerFamily::AuxiliaryVerbs: return "is";
    case MarkerFamily::Conjunctions: return "and";
    case MarkerFamily::Adverbs: return "very";
    case MarkerFamily::ImpersonalPronouns: return "it";
    case MarkerFamily::Negations: return "not";
    case MarkerFamily::PersonalPronouns: return "you";
    case MarkerFamily::Prepositions: return "of";
    default: return "much";
  }
}

std::string_view synth_filler_word() { return "tree"; }

Corpus synth_generate(const SynthSpec& spec) {
  check_probability(spec.q, "q");
  check_probability(spec.p1, "p1");
  check_probability(spec.p0, "p0");
  check_probability(spec.style_low, "style_low");
  check_probability(spec.style_high, "style_high");
  for (const CellOverride& cell : spec.overrides) {
    check_probability(cell.q, "override q");
    check_probability(cell.p1, "override p1");
    check_probability(cell.p0, "override p0");
  }
  if (spec.n_pairs < 1) fail(ErrorCode::InvalidConfig, "n_pairs must be >= 1");
  if (spec.exchanges_per_pair < 1) {
    fail(ErrorCode::InvalidConfig, "exchanges_per_pair must be >= 1");
  }
  if (spec.conversation_length < 2) {
    fail(ErrorCode::InvalidConfig, "conversation_length must be >= 2");
  }

  const auto length = static_cast<std::size_t>(spec.conversation_length);
  const std::size_t planted_per_conversation = length / 2;  // A -> B adjacent exchanges
  const std::size_t conversations_per_pair =
      (static_cast<std::size_t>(spec.exchanges_per_pair) + planted_per_conversation - 1) /
      planted_per_conversation;

  static constexpr std::array<std::array<Gender, 2>, 4> kGenderCycle = {{
      {Gender::Male, Gender::Male},
      {Gender::Female, Gender::Male},
      {Gender::Male, Gender::Female},
      {Gender::Female, Gender::Female},
  }};

  Corpus::Builder builder(Provenance{"synth", SourceFormat::Normalized, ""});
  for (int pair = 0; pair < spec.n_pairs; ++pair) {
    std::string movie_id = "m" + std::to_string(pair);
    std::string a_id = movie_id + "a";
    std::string b_id = movie_id + "b";
    Gender a_gender = Gender::Unknown;
    Gender b_gender = Gender::Unknown;
    if (spec.assign_genders) {
      a_gender = kGenderCycle[static_cast<std::size_t>(pair) % 4][0];
      b_gender = kGenderCycle[static_cast<std::size_t>(pair) % 4][1];
    }

    double q = spec.q, p1 = spec.p1, p0 = spec.p0;
    for (const CellOverride& cell : spec.overrides) {
      if (cell.initiator == a_gender && cell.respondent == b_gender) {
        q = cell.q;
        p1 = cell.p1;
        p0 = cell.p0;
        break;
      }
    }

    builder.add_movie(movie_id, "synthetic #" + std::to_string(pair), std::nullopt, {});
    builder.add_character(a_id, "A", movie_id, a_gender, 1);
    builder.add_character(b_id, "B", movie_id, b_gender, 2);

    rng::Stream stream(rng::derive(spec.seed, static_cast<std::uint64_t>(pair)));
    for (std::size_t conversation = 0; conversation < conversations_per_pair; ++conversation) {
      std::string conversation_id = movie_id + "c" + std::to_string(conversation);

      std::array<double, 2> style_rate = {0.0, 0.0};
      if (spec.style_mode) {
        for (double& rate : style_rate) {
          rate = stream.bernoulli(0.5) ? spec.style_high : spec.style_low;
        }
      }

      std::vector<Corpus::Builder::Line> lines;
      lines.reserve(length);
      std::uint16_t previous_mask = 0;
      for (std::size_t position = 0; position < length; ++position) {
        bool is_a = position % 2 == 0;
        std::uint16_t mask = 0;
        for (MarkerFamily family : all_families()) {
          double rate;
          if (spec.style_mode) {
            rate = style_rate[is_a ? 0 : 1];
          } else if (is_a) {
            rate = q;
          } else {
            bool triggered = (previous_mask >> static_cast<int>(family)) & 1u;
            rate = triggered ? p1 : p0;
          }
          if (stream.bernoulli(rate)) mask |= static_cast<std::uint16_t>(1u << static_cast<int>(family));
        }
        lines.push_back(Corpus::Builder::Line{conversation_id + "u" + std::to_string(position),
                                              is_a ? a_id : b_id, text_for_mask(mask)});
        previous_mask = mask;
      }
      builder.add_conversation(conversation_id, movie_id, {a_id, b_id}, std::move(lines));
    }
  }
  return builder.build(false);
}

}  // namespace chameleon
