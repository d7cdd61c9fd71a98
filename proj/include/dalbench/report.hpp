#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "dalbench/loop.hpp"
#include "dalbench/metrics.hpp"

namespace dalbench {

/// Paths of the files produced by write_results.
struct ResultFiles {
    std::filesystem::path curves;       // curves.csv
    std::filesystem::path histogram;    // labeled_hist.csv
    std::filesystem::path queries;      // queries.csv
    std::filesystem::path summary;      // summary.json
    std::filesystem::path plot;         // curves.svg
};

nlohmann::json config_to_json(const RunConfig& cfg);

/// Writes curves.csv, labeled_hist.csv, queries.csv, summary.json and
/// curves.svg for one or more strategies run on the same data. `provenance`
/// is stored verbatim under "provenance" in summary.json.
ResultFiles write_results(std::span<const SuiteResult> suites, const std::filesystem::path& out_dir,
                          const nlohmann::json& provenance = nlohmann::json::object());

/// Standalone SVG line chart, one polyline per curve.
void render_curves(std::span<const Curve> curves, const std::filesystem::path& out,
                   std::string_view metric_label = "metric");

/// Same chart as a string.
std::string curves_svg(std::span<const Curve> curves, std::string_view metric_label = "metric");

struct CurveTable {
    std::string metric;
    std::vector<Curve> curves;  // seed-averaged, in first-appearance order
};

/// Parses a curves.csv back into seed-averaged curves.
CurveTable read_curves_csv(const std::filesystem::path& path);

}  // namespace dalbench
