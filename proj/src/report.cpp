#include "chameleon/report.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>

#include "chameleon/error.hpp"

namespace chameleon::report {

using nlohmann::json;

namespace {

json number_or_null(double value) {
  if (!std::isfinite(value)) return nullptr;
  return value;
}

json test_json(const stats::TestResult& test) {
  json out;
  out["statistic"] = number_or_null(test.statistic);
  out["df"] = number_or_null(test.df);
  out["p_value"] = number_or_null(test.p_value);
  out["two_sided"] = test.two_sided;
  out["mean_difference"] = number_or_null(test.mean_difference);
  out["n"] = test.n;
  return out;
}

json run_json(const RunInfo& run) {
  json out;
  out["subcommand"] = run.subcommand;
  out["config"] = run.config;
  out["lexicon_hash"] = run.lexicon_hash;
  out["corpus"] = {{"source", run.corpus_source}, {"format", run.corpus_format}};
  out["version"] = std::string(kToolVersion);
  return out;
}

/// Serializes one aggregate. `names` is the full pair-name list and `subset`
/// (when non-null) maps the aggregate's pair_values onto it; `counts` (when
/// non-null) is the matching PairStats row for full sufficient statistics.
json family_json(const FamilyAccommodation& aggregate, const std::vector<PairName>& names,
                 const std::vector<std::size_t>* subset,
                 const std::vector<PairStats>* counts) {
  json out;
  out["family"] = std::string(family_name(aggregate.family));
  out["mean"] = number_or_null(aggregate.mean);
  out["se"] = aggregate.se ? json(*aggregate.se) : json(nullptr);
  out["n_pairs"] = aggregate.n_pairs;
  out["p_cond_mean"] = number_or_null(aggregate.p_cond_mean);
  out["p_base_mean"] = number_or_null(aggregate.p_base_mean);
  out["test"] = aggregate.significance ? test_json(*aggregate.significance) : json(nullptr);

  json pairs = json::array();
  for (std::size_t i = 0; i < aggregate.pair_values.size(); ++i) {
    std::size_t index = subset ? (*subset)[i] : i;
    const PairAccommodation& value = aggregate.pair_values[i];
    json pair;
    pair["initiator"] = names[index].initiator;
    pair["respondent"] = names[index].respondent;
    pair["eligible"] = value.eligible;
    pair["value"] = number_or_null(value.value);
    pair["p_cond"] = number_or_null(value.p_cond);
    pair["p_base"] = number_or_null(value.p_base);
    if (counts) {
      const PairStats& stats = (*counts)[index];
      pair["n_replies"] = stats.n_replies;
      pair["n_trigger"] = stats.n_trigger;
      pair["n_reply_exhibit"] = stats.n_reply_exhibit;
      pair["n_both"] = stats.n_both;
      auto correlation = pair_correlation(stats);
      pair["correlation"] = correlation ? json(*correlation) : json(nullptr);
    }
    pairs.push_back(std::move(pair));
  }
  out["pairs"] = std::move(pairs);
  return out;
}

json family_names_json(const std::vector<MarkerFamily>& families) {
  json out = json::array();
  for (MarkerFamily family : families) out.push_back(std::string(family_name(family)));
  return out;
}

json cell_json(const SliceCell& cell, const std::vector<PairName>& names) {
  json out;
  out["label"] = cell.label;
  out["n_pairs"] = cell.n_pairs;
  json families = json::array();
  for (const FamilyAccommodation& aggregate : cell.families) {
    families.push_back(family_json(aggregate, names, &cell.pair_indices, nullptr));
  }
  out["families"] = std::move(families);
  out["empty_families"] = family_names_json(cell.empty_families);
  return out;
}

}  // namespace

json to_json(const ConvergenceReport& report, const RunInfo& run) {
  json out;
  out["kind"] = "coordinate";
  out["run"] = run_json(run);
  out["n_pairs"] = report.pairs.size();
  out["removed_pairs"] = report.removed_pairs;
  out["total_exchanges"] = report.total_exchanges;
  json families = json::array();
  for (const FamilyAccommodation& aggregate : report.families) {
    families.push_back(family_json(aggregate, report.pairs, nullptr,
                                   &report.stats[static_cast<std::size_t>(aggregate.family)]));
  }
  out["families"] = std::move(families);
  out["empty_families"] = family_names_json(report.empty_families);
  return out;
}

json to_json(const SkipReport& report, const RunInfo& run) {
  json out;
  out["kind"] = "skip";
  out["run"] = run_json(run);
  out["config"] = {{"min_conversation_length", report.config.min_conversation_length},
                   {"gap", report.config.gap}};
  out["conversations_used"] = report.conversations_used;
  out["n_adjacent_pairs"] = report.adjacent_pairs.size();
  out["n_skip_pairs"] = report.skip_pairs.size();
  json families = json::array();
  for (const SkipFamilyResult& result : report.families) {
    json entry;
    entry["family"] = std::string(family_name(result.family));
    entry["adjacent"] = family_json(result.adjacent, report.adjacent_pairs, nullptr, nullptr);
    entry["skipped"] = family_json(result.skipped, report.skip_pairs, nullptr, nullptr);
    families.push_back(std::move(entry));
  }
  out["families"] = std::move(families);
  out["empty_families"] = family_names_json(report.empty_families);
  return out;
}

json to_json(const ShuffleReport& report, const RunInfo& run) {
  json out;
  out["kind"] = "shuffle";
  out["run"] = run_json(run);
  out["n_pairs"] = report.pairs.size();
  json families = json::array();
  for (const ShuffleFamilyResult& result : report.families) {
    json entry;
    entry["family"] = std::string(family_name(result.family));
    entry["observed"] = family_json(result.observed, report.pairs, nullptr, nullptr);
    entry["shuffled"] = family_json(result.shuffled, report.pairs, nullptr, nullptr);
    entry["separation"] = result.separation ? test_json(*result.separation) : json(nullptr);
    families.push_back(std::move(entry));
  }
  out["families"] = std::move(families);
  out["empty_families"] = family_names_json(report.empty_families);
  return out;
}

json to_json(const SelfReport& report, const RunInfo& run) {
  json out;
  out["kind"] = "selfcoord";
  out["run"] = run_json(run);
  out["n_self_pairs"] = report.self_pairs.size();
  out["n_other_pairs"] = report.other_pairs.size();
  json families = json::array();
  for (const SelfFamilyResult& result : report.families) {
    json entry;
    entry["family"] = std::string(family_name(result.family));
    entry["self"] = family_json(result.self, report.self_pairs, nullptr, nullptr);
    entry["other"] = family_json(result.other, report.other_pairs, nullptr, nullptr);
    families.push_back(std::move(entry));
  }
  out["families"] = std::move(families);
  out["empty_families"] = family_names_json(report.empty_families);
  return out;
}

json to_json(const SliceReport& report, const RunInfo& run) {
  json out;
  out["kind"] = "slice";
  out["run"] = run_json(run);
  out["slice"] = {{"kind", std::string(slice_kind_name(report.kind))},
                  {"male_male_only", report.male_male_only},
                  {"merge_some", report.merge_some}};
  json cells = json::array();
  for (const SliceCell& cell : report.cells) cells.push_back(cell_json(cell, report.pairs));
  out["cells"] = std::move(cells);
  out["all"] = cell_json(report.all, report.pairs);
  json comparisons = json::array();
  for (const CellComparison& comparison : report.comparisons) {
    json entry;
    entry["cell_a"] = comparison.cell_a;
    entry["cell_b"] = comparison.cell_b;
    entry["family"] = std::string(family_name(comparison.family));
    entry["test"] = test_json(comparison.test);
    comparisons.push_back(std::move(entry));
  }
  out["comparisons"] = std::move(comparisons);
  out["excluded"] = {{"missing_metadata", report.excluded_missing_metadata},
                     {"unannotated", report.excluded_unannotated},
                     {"by_filter", report.excluded_by_filter}};
  return out;
}

void write_json(const json& document, const std::filesystem::path& file) {
  if (file.has_parent_path()) std::filesystem::create_directories(file.parent_path());
  std::ofstream out(file, std::ios::binary);
  if (!out) fail(ErrorCode::MissingFile, "cannot write " + file.string());
  out << document.dump(2) << '\n';
}

std::string csv_number(double value) {
  if (!std::isfinite(value)) return "";
  char buffer[64];
  std::snprintf(buffer, sizeof(buffer), "%.6g", value);
  return buffer;
}

namespace {

std::string csv_field(const json& value) {
  if (value.is_null()) return "";
  if (value.is_number_float()) return csv_number(value.get<double>());
  if (value.is_number()) return value.dump();
  return value.get<std::string>();
}

struct ChartRow {
  std::string label;
  json value;
  json se;
};

void write_chart(const std::filesystem::path& file, const std::vector<ChartRow>& rows) {
  std::ofstream out(file, std::ios::binary);
  if (!out) fail(ErrorCode::MissingFile, "cannot write " + file.string());
  out << "label,value,se\n";
  for (const ChartRow& row : rows) {
    out << row.label << ',' << csv_field(row.value) << ',' << csv_field(row.se) << '\n';
  }
}

const json& require(const json& document, const char* key) {
  auto it = document.find(key);
  if (it == document.end()) {
    fail(ErrorCode::SyntaxError, "results file lacks required key `" + std::string(key) + "`");
  }
  return *it;
}

/// Two bars per family (per side) for the two-sided experiment kinds.
std::vector<std::filesystem::path> sided_chart(const json& document,
                                               const std::filesystem::path& directory,
                                               const std::string& file_name,
                                               const char* first_side, const char* second_side) {
  std::vector<ChartRow> rows;
  for (const json& entry : require(document, "families")) {
    const std::string family = entry.at("family").get<std::string>();
    for (const char* side : {first_side, second_side}) {
      const json& block = entry.at(side);
      rows.push_back(ChartRow{family + "_" + side, block.at("mean"), block.at("se")});
    }
  }
  auto path = directory / file_name;
  write_chart(path, rows);
  return {path};
}

}  // namespace

void write_summary_csv(const json& document, const std::filesystem::path& file) {
  if (require(document, "kind") != "coordinate") {
    fail(ErrorCode::InvalidConfig, "summary CSV is defined for coordinate results only");
  }
  if (file.has_parent_path()) std::filesystem::create_directories(file.parent_path());
  std::ofstream out(file, std::ios::binary);
  if (!out) fail(ErrorCode::MissingFile, "cannot write " + file.string());
  out << "family,mean,se,n_pairs,p_cond_mean,p_base_mean\n";
  for (const json& entry : require(document, "families")) {
    out << entry.at("family").get<std::string>() << ',' << csv_field(entry.at("mean")) << ','
        << csv_field(entry.at("se")) << ',' << csv_field(entry.at("n_pairs")) << ','
        << csv_field(entry.at("p_cond_mean")) << ',' << csv_field(entry.at("p_base_mean")) << '\n';
  }
}

std::vector<std::filesystem::path> write_chart_csvs(const json& document,
                                                    const std::filesystem::path& directory) {
  std::filesystem::create_directories(directory);
  const std::string kind = require(document, "kind").get<std::string>();

  if (kind == "coordinate") {
    std::vector<ChartRow> accommodation;
    std::vector<ChartRow> components;
    for (const json& entry : require(document, "families")) {
      const std::string family = entry.at("family").get<std::string>();
      accommodation.push_back(ChartRow{family, entry.at("mean"), entry.at("se")});
      components.push_back(ChartRow{family + "_conditional", entry.at("p_cond_mean"), nullptr});
      components.push_back(ChartRow{family + "_baseline", entry.at("p_base_mean"), nullptr});
    }
    auto accommodation_path = directory / "accommodation.csv";
    auto components_path = directory / "components.csv";
    write_chart(accommodation_path, accommodation);
    write_chart(components_path, components);
    return {accommodation_path, components_path};
  }
  if (kind == "skip") return sided_chart(document, directory, "skip.csv", "adjacent", "skipped");
  if (kind == "shuffle") {
    return sided_chart(document, directory, "shuffle.csv", "observed", "shuffled");
  }
  if (kind == "selfcoord") {
    return sided_chart(document, directory, "selfcoord.csv", "self", "other");
  }
  if (kind == "slice") {
    std::vector<ChartRow> cells;
    std::vector<ChartRow> differences;
    const json& all_cell = require(document, "all");

    auto family_block = [](const json& cell, const std::string& family) -> const json* {
      for (const json& entry : cell.at("families")) {
        if (entry.at("family") == family) return &entry;
      }
      return nullptr;
    };
    auto emit_cell = [&](const json& cell) {
      const std::string label = cell.at("label").get<std::string>();
      for (const json& entry : cell.at("families")) {
        const std::string family = entry.at("family").get<std::string>();
        cells.push_back(ChartRow{label + "_" + family, entry.at("mean"), entry.at("se")});
        if (cell.at("label") == all_cell.at("label")) continue;
        const json* reference = family_block(all_cell, family);
        if (!reference) continue;
        json difference =
            entry.at("mean").get<double>() - reference->at("mean").get<double>();
        json se = nullptr;
        if (entry.at("se").is_number() && reference->at("se").is_number()) {
          double a = entry.at("se").get<double>();
          double b = reference->at("se").get<double>();
          se = std::sqrt(a * a + b * b);
        }
        differences.push_back(ChartRow{label + "_" + family, difference, se});
      }
    };
    bool all_is_a_cell = false;
    for (const json& cell : require(document, "cells")) {
      emit_cell(cell);
      all_is_a_cell = all_is_a_cell || cell.at("label") == all_cell.at("label");
    }
    if (!all_is_a_cell) emit_cell(all_cell);

    auto cells_path = directory / "slice_cells.csv";
    auto differences_path = directory / "slice_differences.csv";
    write_chart(cells_path, cells);
    write_chart(differences_path, differences);
    return {cells_path, differences_path};
  }
  fail(ErrorCode::InvalidConfig, "no charts defined for result kind `" + kind + "`");
}

}  // namespace chameleon::report
