#pragma once

#include <filesystem>
#include <string>

#include <json.hpp>

#include "chameleon/experiments.hpp"

namespace chameleon::report {

inline constexpr std::string_view kToolVersion = "0.1.0";

/// Everything a result file needs to be reproducible: the subcommand, the
/// effective configuration, the lexicon content hash, and where the corpus
/// came from. Deliberately no timestamps: identical runs must produce
/// byte-identical files.
struct RunInfo {
  std::string subcommand;
  nlohmann::json config = nlohmann::json::object();
  std::string lexicon_hash;
  std::string corpus_source;
  std::string corpus_format;
};

nlohmann::json to_json(const ConvergenceReport& report, const RunInfo& run);
nlohmann::json to_json(const SkipReport& report, const RunInfo& run);
nlohmann::json to_json(const ShuffleReport& report, const RunInfo& run);
nlohmann::json to_json(const SelfReport& report, const RunInfo& run);
nlohmann::json to_json(const SliceReport& report, const RunInfo& run);

/// One number, one line per key, keys sorted (nlohmann's default map order),
/// trailing newline. NaN and infinities serialize as null.
void write_json(const nlohmann::json& document, const std::filesystem::path& file);

/// Family-level summary (kind "coordinate" only):
/// family,mean,se,n_pairs,p_cond_mean,p_base_mean
void write_summary_csv(const nlohmann::json& document, const std::filesystem::path& file);

/// Chart-data CSVs for the document's kind, one file per chart, one row per
/// bar: label,value,se. Works from the saved JSON alone; no corpus needed.
/// Returns the paths written.
std::vector<std::filesystem::path> write_chart_csvs(const nlohmann::json& document,
                                                    const std::filesystem::path& directory);

/// 6 significant digits, the CSV contract. NaN/inf come out empty.
std::string csv_number(double value);

}  // namespace chameleon::report
