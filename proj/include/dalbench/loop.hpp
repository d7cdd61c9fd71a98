#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <variant>
#include <vector>

#include "dalbench/learners.hpp"
#include "dalbench/metrics.hpp"
#include "dalbench/pooldata.hpp"
#include "dalbench/strategies.hpp"

namespace dalbench {

/// Synthetic mixture, split into train/test, with optional label noise on
/// the training part.
struct GeneratedSource {
    MixtureSpec mixture;
    double train_fraction = 0.8;
    std::uint64_t split_seed = 0;
    double noise_rate = 0.0;
    std::uint64_t noise_seed = 0;
};

/// Tabular file(s). Without a test file the training file is split.
struct FileSource {
    std::filesystem::path train;
    std::optional<std::filesystem::path> test;
    double train_fraction = 0.8;
    std::uint64_t split_seed = 0;
};

struct InMemorySource {
    std::shared_ptr<const Dataset> train;
    std::shared_ptr<const Dataset> test;
};

using DataSource = std::variant<GeneratedSource, FileSource, InMemorySource>;

struct TrainTest {
    Dataset train;
    Dataset test;
};

TrainTest resolve_data(const DataSource& source);

enum class RunMode { Standard, Verification };

struct RunConfig {
    DataSource data;
    StrategyConfig strategy;
    LearnerConfig learner;
    /// Learner for the verification oracle; `learner` when unset.
    std::optional<LearnerConfig> oracle_learner;
    double budget_fraction = 0.1;
    int cycles = 10;
    std::vector<std::uint64_t> seeds{0, 1, 2, 3, 4};
    MetricKind metric = MetricKind::Accuracy;
    std::optional<CollapseMap> collapse;
    RunMode mode = RunMode::Standard;

    void validate() const;
    const LearnerConfig& oracle_config() const { return oracle_learner ? *oracle_learner : learner; }
};

struct CycleRecord {
    int cycle = 0;
    std::size_t labeled_count = 0;
    double metric_value = 0.0;
    std::vector<std::size_t> per_class_labeled;
    QueryBatch queried;
};

struct ExperimentRun {
    std::uint64_t seed = 0;
    std::vector<CycleRecord> cycles;
    /// Test metric of the verification oracle; empty in standard mode.
    std::optional<double> oracle_metric;
};

/// Per-cycle batch sizes. Every cycle gets floor(fraction * n); the
/// remainder up to round(fraction * n * cycles) (capped at n) goes to cycle 0.
std::vector<std::size_t> budget_schedule(std::size_t n_train, double fraction, int cycles);

/// Chooses the model whose outputs drive querying, given the model trained
/// on the current labeled pool.
using QueryModelFn = std::function<const FittedModel&(const FittedModel& cycle_model)>;

/// The cycle protocol with a pluggable query model. Cycle 0 is random; each
/// later cycle builds a view from the query model, selects, commits, then
/// trains a fresh model on the enlarged pool and scores it on the test set.
ExperimentRun run_cycles(const RunConfig& cfg, const TrainTest& data, std::uint64_t seed,
                         const QueryModelFn& query_model);

ExperimentRun run_experiment(const RunConfig& cfg, const TrainTest& data, std::uint64_t seed);
ExperimentRun run_experiment(const RunConfig& cfg, std::uint64_t seed);

/// Model trained once on the whole training set with the oracle learner.
FittedModel train_oracle(const RunConfig& cfg, const TrainTest& data, std::uint64_t seed);

/// Queries with a fully trained oracle; evaluation models are still trained
/// per cycle on the labeled pool.
ExperimentRun run_verification(const RunConfig& cfg, const TrainTest& data, std::uint64_t seed);
ExperimentRun run_verification(const RunConfig& cfg, const TrainTest& data, std::uint64_t seed,
                               const FittedModel& oracle);
ExperimentRun run_verification(const RunConfig& cfg, std::uint64_t seed);

/// Test-set score of a model under the configured metric.
double evaluate(const RunConfig& cfg, const FittedModel& model, const Dataset& test);

struct SuiteResult {
    RunConfig config;
    /// Sorted by seed.
    std::vector<ExperimentRun> per_seed;
    std::vector<double> mean_curve;
    std::vector<std::size_t> labeled_counts;
    std::optional<double> mean_oracle_metric;

    Curve curve() const;
};

/// Runs every seed (in parallel when hardware allows) and averages per cycle.
SuiteResult run_suite(const RunConfig& cfg);
SuiteResult run_suite(const RunConfig& cfg, const TrainTest& data);

}  // namespace dalbench
