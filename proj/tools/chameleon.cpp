// chameleon: measures immediate stylistic accommodation between speakers in
// dialog corpora. Subcommands ingest corpora, run the analyses, generate
// synthetic ground-truth data, and re-export chart CSVs from saved results.

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "chameleon/coordination.hpp"
#include "chameleon/corpus.hpp"
#include "chameleon/error.hpp"
#include "chameleon/experiments.hpp"
#include "chameleon/markers.hpp"
#include "chameleon/parallel.hpp"
#include "chameleon/report.hpp"
#include "chameleon/stats.hpp"
#include "chameleon/synth.hpp"

namespace {

using chameleon::AnalysisOptions;
using chameleon::Corpus;
using chameleon::Lexicon;
using nlohmann::json;

constexpr int kExitOk = 0;
constexpr int kExitDataError = 1;
constexpr int kExitUsage = 2;

struct CommonArgs {
  std::string corpus;
  std::string format = "cornell";
  std::string lexicon;
  bool allow_empty_family = false;
  int min_exchanges = 5;
  int min_count = 10;
  std::size_t resamples = 1000;
  std::uint64_t seed = 0;
  int threads = chameleon::default_thread_count();
  bool weighted = false;
  std::string out;
  std::string charts;
};

void add_common_flags(CLI::App* cmd, CommonArgs& args, bool needs_seed) {
  cmd->add_option("--corpus", args.corpus, "corpus path (directory or file, per --format)")
      ->required();
  cmd->add_option("--format", args.format, "corpus format: cornell | jsonl | norm")
      ->default_val("cornell");
  cmd->add_option("--lexicon", args.lexicon,
                  "marker lexicon TSV (default: $CHAMELEON_LEXICON)");
  cmd->add_flag("--allow-empty-family", args.allow_empty_family,
                "accept lexicons that leave marker families empty");
  cmd->add_option("--min-exchanges", args.min_exchanges,
                  "drop ordered pairs with fewer exchanges than this")
      ->default_val(5);
  cmd->add_option("--min-count", args.min_count,
                  "eligibility threshold on trigger and reply counts")
      ->default_val(10);
  cmd->add_option("--resamples", args.resamples, "bootstrap resample count")->default_val(1000);
  auto* seed = cmd->add_option("--seed", args.seed, "RNG seed; pins every randomized step");
  if (needs_seed) seed->required();
  cmd->add_option("--threads", args.threads, "worker threads (default: all cores)");
  cmd->add_flag("--weighted", args.weighted, "weight pair aggregation by exchange counts");
  cmd->add_option("--out", args.out, "output JSON path")->required();
  cmd->add_option("--charts", args.charts, "also write chart CSVs into this directory");
}

std::string resolve_lexicon_path(const CommonArgs& args) {
  if (!args.lexicon.empty()) return args.lexicon;
  if (const char* env = std::getenv("CHAMELEON_LEXICON"); env && *env) return env;
  throw CLI::ValidationError("--lexicon", "no lexicon given and CHAMELEON_LEXICON is unset");
}

chameleon::SourceFormat resolve_format(const std::string& name) {
  auto format = chameleon::format_from_name(name);
  if (!format) {
    throw CLI::ValidationError("--format", "unknown format `" + name +
                                               "` (expected cornell | jsonl | norm)");
  }
  return *format;
}

AnalysisOptions analysis_options(const CommonArgs& args) {
  AnalysisOptions options;
  options.min_count = args.min_count;
  options.min_exchanges = args.min_exchanges;
  options.n_resamples = args.resamples;
  options.seed = args.seed;
  options.threads = args.threads;
  options.exchange_weighted = args.weighted;
  return options;
}

json common_config(const CommonArgs& args, const std::string& lexicon_path) {
  json config;
  config["corpus"] = args.corpus;
  config["format"] = args.format;
  config["lexicon"] = lexicon_path;
  config["min_exchanges"] = args.min_exchanges;
  config["min_count"] = args.min_count;
  config["resamples"] = args.resamples;
  config["seed"] = args.seed;
  // --threads deliberately not echoed: results are thread-count independent,
  // and identical analyses must serialize byte-identically
  config["weighted"] = args.weighted;
  return config;
}

struct LoadedInputs {
  Corpus corpus;
  Lexicon lexicon;
  std::string lexicon_path;
};

LoadedInputs load_inputs(const CommonArgs& args) {
  std::string lexicon_path = resolve_lexicon_path(args);
  chameleon::LexiconOptions lexicon_options;
  lexicon_options.allow_empty_family = args.allow_empty_family;
  LoadedInputs inputs{
      chameleon::parse_corpus(args.corpus, resolve_format(args.format), {}),
      Lexicon::load(lexicon_path, lexicon_options),
      std::move(lexicon_path),
  };
  for (const std::string& warning : inputs.corpus.report().warnings) {
    std::cerr << "warning: " << warning << '\n';
  }
  return inputs;
}

chameleon::report::RunInfo run_info(const std::string& subcommand, const CommonArgs& args,
                                    const LoadedInputs& inputs, json extra_config) {
  chameleon::report::RunInfo run;
  run.subcommand = subcommand;
  run.config = common_config(args, inputs.lexicon_path);
  for (auto& [key, value] : extra_config.items()) run.config[key] = value;
  run.lexicon_hash = inputs.lexicon.content_hash_hex();
  run.corpus_source = inputs.corpus.provenance().source;
  run.corpus_format = std::string(chameleon::format_name(inputs.corpus.provenance().format));
  return run;
}

void emit(const json& document, const CommonArgs& args) {
  chameleon::report::write_json(document, args.out);
  std::cout << "wrote " << args.out << '\n';
  if (!args.charts.empty()) {
    for (const auto& path : chameleon::report::write_chart_csvs(document, args.charts)) {
      std::cout << "wrote " << path.string() << '\n';
    }
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"immediate stylistic accommodation in dialog corpora"};
  app.require_subcommand(1);

  // --- ingest ---------------------------------------------------------------
  struct {
    std::string corpus, format = "cornell", out;
    double tolerance = 0.01;
  } ingest;
  auto* ingest_cmd = app.add_subcommand("ingest", "parse a corpus and write the normalized form");
  ingest_cmd->add_option("--corpus", ingest.corpus, "corpus path")->required();
  ingest_cmd->add_option("--format", ingest.format, "cornell | jsonl | norm")
      ->default_val("cornell");
  ingest_cmd->add_option("--out", ingest.out, "normalized output file")->required();
  ingest_cmd->add_option("--tolerance", ingest.tolerance, "malformed line fraction tolerated")
      ->default_val(0.01);

  // --- coordinate -----------------------------------------------------------
  CommonArgs coordinate;
  std::string coordinate_csv;
  auto* coordinate_cmd =
      app.add_subcommand("coordinate", "per-family accommodation over all speaker pairs");
  add_common_flags(coordinate_cmd, coordinate, true);
  coordinate_cmd->add_option("--csv", coordinate_csv, "also write the family summary CSV");

  // --- skip -----------------------------------------------------------------
  CommonArgs skip;
  chameleon::SkipConfig skip_config;
  auto* skip_cmd = app.add_subcommand("skip", "adjacent vs skipped-reply accommodation");
  add_common_flags(skip_cmd, skip, true);
  skip_cmd->add_option("--gap", skip_config.gap, "skip distance (odd)")->default_val(3);
  skip_cmd
      ->add_option("--min-length", skip_config.min_conversation_length,
                   "minimum conversation length")
      ->default_val(5);

  // --- shuffle --------------------------------------------------------------
  CommonArgs shuffle;
  auto* shuffle_cmd =
      app.add_subcommand("shuffle", "observed accommodation vs within-speaker shuffled control");
  add_common_flags(shuffle_cmd, shuffle, true);

  // --- selfcoord ------------------------------------------------------------
  CommonArgs selfcoord;
  int self_gap = 2;
  auto* selfcoord_cmd =
      app.add_subcommand("selfcoord", "self-coordination vs coordination to others");
  add_common_flags(selfcoord_cmd, selfcoord, true);
  selfcoord_cmd->add_option("--self-gap", self_gap, "distance between same-speaker utterances")
      ->default_val(2);

  // --- slice ----------------------------------------------------------------
  CommonArgs slice;
  std::string slice_by = "all";
  std::string quarrels_path;
  bool merge_some = false;
  bool male_male_only = false;
  auto* slice_cmd = app.add_subcommand("slice", "accommodation split by speaker metadata");
  add_common_flags(slice_cmd, slice, true);
  slice_cmd
      ->add_option("--by", slice_by,
                   "initiator_gender | respondent_gender | gender_pair | billing | quarrel | all")
      ->required();
  slice_cmd->add_option("--quarrels", quarrels_path, "quarrel annotation TSV (quarrel slice)");
  slice_cmd->add_flag("--merge-some", merge_some, "fold some_quarreling into quarreling");
  slice_cmd->add_flag("--male-male-only", male_male_only,
                      "billing slice: keep only male-male pairs");

  // --- synth ----------------------------------------------------------------
  chameleon::SynthSpec synth;
  std::string synth_out;
  std::vector<std::string> cell_specs;
  bool no_genders = false;
  auto* synth_cmd = app.add_subcommand("synth", "generate a ground-truth synthetic corpus");
  synth_cmd->add_option("--pairs", synth.n_pairs, "speaker pairs to generate")->default_val(200);
  synth_cmd->add_option("--exchanges", synth.exchanges_per_pair, "planted exchanges per pair")
      ->default_val(100);
  synth_cmd->add_option("--q", synth.q, "trigger exhibit probability")->default_val(0.5);
  synth_cmd->add_option("--p1", synth.p1, "reply exhibit probability after a trigger")
      ->default_val(0.8);
  synth_cmd->add_option("--p0", synth.p0, "reply exhibit probability otherwise")->default_val(0.4);
  synth_cmd->add_option("--conv-len", synth.conversation_length, "utterances per conversation")
      ->default_val(2);
  synth_cmd->add_option("--seed", synth.seed, "RNG seed")->required();
  synth_cmd->add_flag("--style", synth.style_mode,
                      "per-speaker style rates instead of triggering");
  synth_cmd->add_option("--style-low", synth.style_low, "low style rate")->default_val(0.2);
  synth_cmd->add_option("--style-high", synth.style_high, "high style rate")->default_val(0.8);
  synth_cmd->add_flag("--no-genders", no_genders, "leave every character's gender unknown");
  synth_cmd->add_option("--cell", cell_specs,
                        "per-gender-cell override, e.g. MM:0.5,0.9,0.4 (q,p1,p0); repeatable");
  synth_cmd->add_option("--out", synth_out, "normalized corpus output file")->required();

  // --- report ---------------------------------------------------------------
  std::string report_in, report_charts, report_csv;
  auto* report_cmd =
      app.add_subcommand("report", "regenerate chart CSVs from a saved results JSON");
  report_cmd->add_option("--in", report_in, "saved results JSON")->required();
  report_cmd->add_option("--charts", report_charts, "chart CSV output directory");
  report_cmd->add_option("--csv", report_csv, "summary CSV (coordinate results)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);  // prints the message and the relevant help text
    return kExitUsage;
  }

  try {
    if (ingest_cmd->parsed()) {
      chameleon::ParseOptions options;
      options.malformed_tolerance = ingest.tolerance;
      Corpus corpus =
          chameleon::parse_corpus(ingest.corpus, resolve_format(ingest.format), options);
      for (const std::string& warning : corpus.report().warnings) {
        std::cerr << "warning: " << warning << '\n';
      }
      chameleon::save_normalized(corpus, std::filesystem::path(ingest.out));
      const chameleon::ParseReport& parse = corpus.report();
      std::cout << "movies=" << corpus.movies().size()
                << " characters=" << corpus.characters().size()
                << " conversations=" << corpus.conversations().size()
                << " utterances=" << corpus.utterance_count()
                << " malformed_lines=" << parse.malformed_lines
                << " encoding_fallback_lines=" << parse.encoding_fallback_lines
                << " duplicate_conversations=" << parse.duplicate_conversations << '\n';
      std::cout << "wrote " << ingest.out << '\n';
      return kExitOk;
    }

    if (coordinate_cmd->parsed()) {
      LoadedInputs inputs = load_inputs(coordinate);
      auto result =
          chameleon::convergence_report(inputs.corpus, inputs.lexicon, analysis_options(coordinate));
      json document = chameleon::report::to_json(
          result, run_info("coordinate", coordinate, inputs, json::object()));
      emit(document, coordinate);
      if (!coordinate_csv.empty()) {
        chameleon::report::write_summary_csv(document, coordinate_csv);
        std::cout << "wrote " << coordinate_csv << '\n';
      }
      return kExitOk;
    }

    if (skip_cmd->parsed()) {
      LoadedInputs inputs = load_inputs(skip);
      auto result = chameleon::skip_analysis(inputs.corpus, inputs.lexicon, skip_config,
                                             analysis_options(skip));
      json extra = {{"gap", skip_config.gap},
                    {"min_length", skip_config.min_conversation_length}};
      emit(chameleon::report::to_json(result, run_info("skip", skip, inputs, extra)), skip);
      return kExitOk;
    }

    if (shuffle_cmd->parsed()) {
      LoadedInputs inputs = load_inputs(shuffle);
      auto result =
          chameleon::shuffle_control(inputs.corpus, inputs.lexicon, analysis_options(shuffle));
      emit(chameleon::report::to_json(result, run_info("shuffle", shuffle, inputs, json::object())),
           shuffle);
      return kExitOk;
    }

    if (selfcoord_cmd->parsed()) {
      LoadedInputs inputs = load_inputs(selfcoord);
      AnalysisOptions options = analysis_options(selfcoord);
      options.self_gap = self_gap;
      auto result = chameleon::self_accommodation(inputs.corpus, inputs.lexicon, options);
      json extra = {{"self_gap", self_gap}};
      emit(chameleon::report::to_json(result, run_info("selfcoord", selfcoord, inputs, extra)),
           selfcoord);
      return kExitOk;
    }

    if (slice_cmd->parsed()) {
      auto kind = chameleon::slice_kind_from_name(slice_by);
      if (!kind) {
        std::cerr << "error: unknown slice kind `" << slice_by << "`\n"
                  << slice_cmd->help() << '\n';
        return kExitUsage;
      }
      LoadedInputs inputs = load_inputs(slice);
      chameleon::SliceSpec spec;
      spec.kind = *kind;
      spec.merge_some = merge_some;
      spec.male_male_only = male_male_only;
      if (!quarrels_path.empty()) {
        spec.quarrels = chameleon::load_quarrel_annotations(quarrels_path);
      }
      auto result =
          chameleon::slice_analysis(inputs.corpus, inputs.lexicon, spec, analysis_options(slice));
      json extra = {{"by", slice_by},
                    {"merge_some", merge_some},
                    {"male_male_only", male_male_only},
                    {"quarrels", quarrels_path}};
      emit(chameleon::report::to_json(result, run_info("slice", slice, inputs, extra)), slice);
      return kExitOk;
    }

    if (synth_cmd->parsed()) {
      synth.assign_genders = !no_genders;
      for (const std::string& cell_spec : cell_specs) {
        // format: two gender letters, colon, q,p1,p0
        chameleon::CellOverride cell;
        auto bad = [&]() {
          std::cerr << "error: malformed --cell `" << cell_spec << "` (expected e.g. MM:0.5,0.9,0.4)\n";
          return kExitUsage;
        };
        if (cell_spec.size() < 4 || cell_spec[2] != ':') return bad();
        auto gender_of = [](char c) {
          return c == 'M'   ? chameleon::Gender::Male
                 : c == 'F' ? chameleon::Gender::Female
                            : chameleon::Gender::Unknown;
        };
        cell.initiator = gender_of(cell_spec[0]);
        cell.respondent = gender_of(cell_spec[1]);
        if (cell.initiator == chameleon::Gender::Unknown ||
            cell.respondent == chameleon::Gender::Unknown) {
          return bad();
        }
        if (std::sscanf(cell_spec.c_str() + 3, "%lf,%lf,%lf", &cell.q, &cell.p1, &cell.p0) != 3) {
          return bad();
        }
        synth.overrides.push_back(cell);
      }
      Corpus corpus = chameleon::synth_generate(synth);
      chameleon::save_normalized(corpus, std::filesystem::path(synth_out));
      std::cout << "wrote " << synth_out << " (" << corpus.conversations().size()
                << " conversations, " << corpus.utterance_count() << " utterances)\n";
      return kExitOk;
    }

    if (report_cmd->parsed()) {
      std::ifstream in(report_in, std::ios::binary);
      if (!in) {
        chameleon::fail(chameleon::ErrorCode::MissingFile, "cannot open " + report_in);
      }
      json document = json::parse(in, nullptr, false);
      if (document.is_discarded()) {
        chameleon::fail(chameleon::ErrorCode::SyntaxError, report_in + " is not valid JSON");
      }
      if (report_charts.empty() && report_csv.empty()) {
        std::cerr << "error: nothing to do; pass --charts and/or --csv\n";
        return kExitUsage;
      }
      if (!report_charts.empty()) {
        for (const auto& path : chameleon::report::write_chart_csvs(document, report_charts)) {
          std::cout << "wrote " << path.string() << '\n';
        }
      }
      if (!report_csv.empty()) {
        chameleon::report::write_summary_csv(document, report_csv);
        std::cout << "wrote " << report_csv << '\n';
      }
      return kExitOk;
    }
  } catch (const CLI::ValidationError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const chameleon::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitDataError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitDataError;
  }
  return kExitOk;
}
