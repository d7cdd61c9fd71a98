#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "dalbench/report.hpp"

using namespace dalbench;
namespace fs = std::filesystem;

namespace {

RunConfig tiny(StrategyName strategy, std::vector<std::uint64_t> seeds) {
    GeneratedSource src;
    src.mixture.class_count = 3;
    src.mixture.dims = 2;
    src.mixture.per_class_counts = {50, 50, 50};
    src.mixture.class_means = grid_means(3, 2, 1.0);
    src.mixture.class_stddev = 0.4;
    RunConfig cfg;
    cfg.data = src;
    cfg.strategy.name = strategy;
    cfg.learner.epochs = 10;
    cfg.seeds = std::move(seeds);
    return cfg;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream s;
    s << in.rdbuf();
    return s.str();
}

std::vector<std::string> lines(const fs::path& p) {
    std::ifstream in(p);
    std::vector<std::string> out;
    for (std::string line; std::getline(in, line);) out.push_back(line);
    return out;
}

std::size_t count(const std::string& text, const std::string& needle) {
    std::size_t n = 0;
    for (auto pos = text.find(needle); pos != std::string::npos; pos = text.find(needle, pos + 1)) ++n;
    return n;
}

fs::path fresh_dir(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / ("dalbench_report_" + name);
    fs::remove_all(dir);
    return dir;
}

}  // namespace

TEST(WriteResults, RowCounts) {
    const std::vector<SuiteResult> suites{run_suite(tiny(StrategyName::Entropy, {0, 1, 2, 3, 4}))};
    const fs::path dir = fresh_dir("rows");
    const ResultFiles files = write_results(suites, dir);

    const auto curves = lines(files.curves);
    EXPECT_EQ(curves.front(), "strategy,seed,cycle,labeled_count,metric,value");
    EXPECT_EQ(curves.size(), 1u + 5 * 10);
    const auto hist = lines(files.histogram);
    EXPECT_EQ(hist.front(), "strategy,seed,cycle,class,count");
    EXPECT_EQ(hist.size(), 1u + 5 * 10 * 3);
    const auto queries = lines(files.queries);
    std::size_t queried = 0;
    for (const auto& c : suites[0].per_seed[0].cycles) queried += c.queried.size();
    EXPECT_EQ(queries.size(), 1u + 5 * queried);

    const auto summary = nlohmann::json::parse(slurp(files.summary));
    ASSERT_EQ(summary["strategies"].size(), 1u);
    const auto& s = summary["strategies"][0];
    EXPECT_EQ(s["strategy"], "entropy");
    EXPECT_EQ(s["mean_curve"].size(), 10u);
    EXPECT_NEAR(s["aubc"].get<double>(), aubc(suites[0].curve()), 1e-12);
    EXPECT_FALSE(summary.contains("oracle_metric"));
    EXPECT_EQ(summary["config"]["protocol"]["seeds"], nlohmann::json({0, 1, 2, 3, 4}));
}

TEST(WriteResults, RerunIsByteIdentical) {
    const auto cfg = tiny(StrategyName::Coreset, {2, 0});
    const std::vector<SuiteResult> a{run_suite(cfg)};
    const std::vector<SuiteResult> b{run_suite(cfg)};
    const ResultFiles fa = write_results(a, fresh_dir("a"));
    const ResultFiles fb = write_results(b, fresh_dir("b"));
    EXPECT_EQ(slurp(fa.curves), slurp(fb.curves));
    EXPECT_EQ(slurp(fa.histogram), slurp(fb.histogram));
    EXPECT_EQ(slurp(fa.queries), slurp(fb.queries));
    EXPECT_EQ(slurp(fa.summary), slurp(fb.summary));
    EXPECT_EQ(slurp(fa.plot), slurp(fb.plot));
}

TEST(WriteResults, VerificationSummary) {
    auto cfg = tiny(StrategyName::Entropy, {0});
    cfg.mode = RunMode::Verification;
    const std::vector<SuiteResult> suites{run_suite(cfg)};
    const auto summary = nlohmann::json::parse(slurp(write_results(suites, fresh_dir("verify")).summary));
    EXPECT_TRUE(summary.contains("oracle_metric"));
    EXPECT_EQ(summary["strategies"][0]["oracle_metric"], summary["oracle_metric"]);
}

TEST(CurvesSvg, OnePolylinePerCurve) {
    const std::vector<Curve> one{{"a", {{10, 0.5}, {20, 0.7}}}};
    const std::vector<Curve> three{{"a", {{10, 0.5}, {20, 0.7}}},
                                   {"b", {{10, 0.4}, {20, 0.6}}},
                                   {"c", {{10, 0.9}, {20, 0.9}}}};
    EXPECT_EQ(count(curves_svg(one), "<polyline"), 1u);
    const std::string svg = curves_svg(three, "accuracy");
    EXPECT_EQ(count(svg, "<polyline"), 3u);
    EXPECT_NE(svg.find(">b<"), std::string::npos);
    EXPECT_EQ(svg, curves_svg(three, "accuracy"));
    EXPECT_THROW(curves_svg(std::vector<Curve>{}), ValidationError);
}

TEST(ReadCurvesCsv, AveragesSeeds) {
    const std::vector<SuiteResult> suites{run_suite(tiny(StrategyName::Random, {1, 2})),
                                          run_suite(tiny(StrategyName::KMeans, {1, 2}))};
    const ResultFiles files = write_results(suites, fresh_dir("read"));
    const CurveTable table = read_curves_csv(files.curves);
    EXPECT_EQ(table.metric, "accuracy");
    ASSERT_EQ(table.curves.size(), 2u);
    EXPECT_EQ(table.curves[0].name, "random");
    EXPECT_EQ(table.curves[1].name, "kmeans");
    for (std::size_t s = 0; s < 2; ++s) {
        const Curve expected = suites[s].curve();
        ASSERT_EQ(table.curves[s].points.size(), expected.points.size());
        for (std::size_t i = 0; i < expected.points.size(); ++i) {
            EXPECT_EQ(table.curves[s].points[i].labeled_count, expected.points[i].labeled_count);
            EXPECT_NEAR(table.curves[s].points[i].value, expected.points[i].value, 1e-12);
        }
    }
    EXPECT_THROW(read_curves_csv(fresh_dir("missing") / "curves.csv"), ParseError);
}
