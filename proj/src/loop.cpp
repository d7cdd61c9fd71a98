#include "dalbench/loop.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <thread>

#include <fmt/format.h>

#include "dalbench/rng.hpp"

namespace dalbench {

namespace {

// Absorbs representation error in products like 0.29 * 100.
constexpr double kCountSlack = 1e-9;

Dataset require_nonempty(std::shared_ptr<const Dataset> ds, const char* what) {
    if (!ds) throw ConfigurationError(fmt::format("in-memory source is missing the {} set", what));
    return *ds;
}

}  // namespace

TrainTest resolve_data(const DataSource& source) {
    return std::visit(
        [](const auto& src) -> TrainTest {
            using T = std::decay_t<decltype(src)>;
            if constexpr (std::is_same_v<T, GeneratedSource>) {
                auto parts = split(generate_mixture(src.mixture), src.train_fraction, src.split_seed);
                if (src.noise_rate > 0.0) {
                    parts.train = inject_label_noise(parts.train, src.noise_rate, src.noise_seed);
                }
                return {std::move(parts.train), std::move(parts.test)};
            } else if constexpr (std::is_same_v<T, FileSource>) {
                Dataset train = load_table(src.train);
                if (src.test) {
                    Dataset test = load_table(*src.test);
                    if (test.dims() != train.dims() || test.class_count() != train.class_count()) {
                        throw ConfigurationError("train and test files disagree on shape");
                    }
                    return {std::move(train), std::move(test)};
                }
                auto parts = split(train, src.train_fraction, src.split_seed);
                return {std::move(parts.train), std::move(parts.test)};
            } else {
                return {require_nonempty(src.train, "train"), require_nonempty(src.test, "test")};
            }
        },
        source);
}

void RunConfig::validate() const {
    if (!(budget_fraction > 0.0 && budget_fraction <= 1.0)) {
        throw ConfigurationError(fmt::format("budget_fraction {} outside (0,1]", budget_fraction));
    }
    if (cycles < 1) throw ConfigurationError("cycles must be >= 1");
    if (cycles * budget_fraction > 1.0 + kCountSlack) {
        throw ConfigurationError(
            fmt::format("{} cycles of {} exceed the training set", cycles, budget_fraction));
    }
    if (seeds.empty()) throw ConfigurationError("at least one seed is required");
    std::vector<std::uint64_t> sorted = seeds;
    std::sort(sorted.begin(), sorted.end());
    if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) {
        throw ConfigurationError("seeds must be distinct");
    }
    strategy.validate();
    learner.validate();
    if (oracle_learner) oracle_learner->validate();
}

std::vector<std::size_t> budget_schedule(std::size_t n_train, double fraction, int cycles) {
    if (cycles < 1) throw ConfigurationError("cycles must be >= 1");
    const double per_cycle = fraction * static_cast<double>(n_train);
    if (!(per_cycle + kCountSlack >= 1.0)) {
        throw ConfigurationError(
            fmt::format("fraction {} of {} samples is less than one sample per cycle", fraction, n_train));
    }
    const auto base = static_cast<std::size_t>(std::floor(per_cycle + kCountSlack));
    const auto intended = std::min(
        n_train, static_cast<std::size_t>(std::llround(per_cycle * static_cast<double>(cycles))));
    const auto c = static_cast<std::size_t>(cycles);
    if (c * base > intended) {
        throw ConfigurationError(fmt::format("{} cycles of {} exceed {} samples", cycles, base, n_train));
    }
    std::vector<std::size_t> schedule(c, base);
    schedule[0] += intended - c * base;
    return schedule;
}

double evaluate(const RunConfig& cfg, const FittedModel& model, const Dataset& test) {
    const Labels pred = predict_labels(model, test.features());
    if (cfg.metric == MetricKind::Accuracy) return accuracy(pred, test.labels());
    if (cfg.collapse) return f1_binary(pred, test.labels(), *cfg.collapse);
    if (test.class_count() != 2) {
        throw ConfigurationError("f1-binary on more than two classes needs a collapse map");
    }
    return f1_binary(pred, test.labels(), CollapseMap::identity_binary());
}

namespace {

Matrix rows_of(const Matrix& x, const IndexList& rows) {
    Matrix out(static_cast<Eigen::Index>(rows.size()), x.cols());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        out.row(static_cast<Eigen::Index>(i)) = x.row(static_cast<Eigen::Index>(rows[i]));
    }
    return out;
}

FittedModel train_on_pool(const LearnerConfig& learner, const Dataset& train, const PoolState& pool,
                          std::uint64_t seed) {
    Labels y;
    y.reserve(pool.labeled().size());
    for (std::size_t i : pool.labeled()) y.push_back(train.labels()[i]);
    return dalbench::train(learner, rows_of(train.features(), pool.labeled()), y, train.class_count(),
                           seed);
}

/// Cluster Margin clusters, computed once over the pool at the first
/// strategic cycle and looked up by dataset index afterwards.
class ClusterCache {
public:
    const ClusterAssignment& for_pool(const StrategyConfig& strategy, const EmbeddingMatrix& embed_u,
                                      const PoolState& pool, std::size_t b) {
        const IndexList& u = pool.unlabeled();
        if (by_index_.empty()) {
            const std::size_t wanted =
                strategy.cm_cluster_count > 0 ? static_cast<std::size_t>(strategy.cm_cluster_count) : 10 * b;
            k_ = std::max<std::size_t>(1, std::min(wanted, u.size()));
            ClusterAssignment full = k_ == u.size() ? singletons(u.size()) : agglomerative_cluster(embed_u, k_);
            by_index_.assign(pool.dataset_size(), -1);
            for (std::size_t i = 0; i < u.size(); ++i) by_index_[u[i]] = full.assignment[i];
        }
        current_.k = static_cast<int>(k_);
        current_.assignment.resize(u.size());
        for (std::size_t i = 0; i < u.size(); ++i) {
            const int c = by_index_[u[i]];
            if (c < 0) throw ContractViolation("unlabeled sample missing from the cluster map");
            current_.assignment[i] = c;
        }
        return current_;
    }

private:
    static ClusterAssignment singletons(std::size_t n) {
        ClusterAssignment a{std::vector<int>(n), static_cast<int>(n)};
        for (std::size_t i = 0; i < n; ++i) a.assignment[i] = static_cast<int>(i);
        return a;
    }

    std::vector<int> by_index_;
    std::size_t k_ = 0;
    ClusterAssignment current_;
};

ModelView build_view(const StrategyConfig& strategy, const FittedModel& model, const Dataset& train,
                     const PoolState& pool, std::size_t b, std::uint64_t mc_seed, ClusterCache& clusters) {
    ModelView view;
    if (strategy.name == StrategyName::Random) return view;
    const Matrix xu = rows_of(train.features(), pool.unlabeled());
    if (strategy.needs_probs()) view.probs = predict_proba(model, xu);
    if (strategy.needs_mc()) {
        view.mc_probs = mc_predict(model, xu, strategy.mc_iterations, strategy.dropout_rate, mc_seed);
    }
    if (strategy.needs_embeddings()) view.embed_unlabeled = embed(model, xu);
    if (strategy.name == StrategyName::Coreset) {
        view.embed_labeled = embed(model, rows_of(train.features(), pool.labeled()));
    }
    if (strategy.name == StrategyName::ClusterMargin) {
        view.clusters = clusters.for_pool(strategy, *view.embed_unlabeled, pool, b);
    }
    return view;
}

}  // namespace

ExperimentRun run_cycles(const RunConfig& cfg, const TrainTest& data, std::uint64_t seed,
                         const QueryModelFn& query_model) {
    cfg.validate();
    const Dataset& train = data.train;
    if (train.dims() != data.test.dims()) throw ConfigurationError("train and test widths differ");
    const auto schedule = budget_schedule(train.size(), cfg.budget_fraction, cfg.cycles);

    ExperimentRun run;
    run.seed = seed;
    PoolState pool = init_pool(train);
    ClusterCache clusters;
    std::optional<FittedModel> cycle_model;

    for (int c = 0; c < cfg.cycles; ++c) {
        const std::size_t b = schedule[static_cast<std::size_t>(c)];
        const auto query_seed = derive_seed(seed, static_cast<std::uint64_t>(c), "query");
        QueryBatch batch;
        if (c == 0) {
            batch = select_random(pool, b, query_seed);
        } else {
            const FittedModel& qm = query_model(*cycle_model);
            const ModelView view = build_view(cfg.strategy, qm, train, pool, b,
                                              derive_seed(seed, static_cast<std::uint64_t>(c), "mc"), clusters);
            batch = select(cfg.strategy, view, pool, b, query_seed);
        }
        batch.cycle = c;
        pool = commit_query(pool, batch);

        cycle_model.emplace(
            train_on_pool(cfg.learner, train, pool, derive_seed(seed, static_cast<std::uint64_t>(c), "train")));

        CycleRecord rec;
        rec.cycle = c;
        rec.labeled_count = pool.labeled().size();
        rec.metric_value = evaluate(cfg, *cycle_model, data.test);
        rec.per_class_labeled = class_histogram(pool, train.labels(), train.class_count());
        rec.queried = std::move(batch);
        run.cycles.push_back(std::move(rec));
    }
    return run;
}

ExperimentRun run_experiment(const RunConfig& cfg, const TrainTest& data, std::uint64_t seed) {
    return run_cycles(cfg, data, seed, [](const FittedModel& m) -> const FittedModel& { return m; });
}

ExperimentRun run_experiment(const RunConfig& cfg, std::uint64_t seed) {
    return run_experiment(cfg, resolve_data(cfg.data), seed);
}

FittedModel train_oracle(const RunConfig& cfg, const TrainTest& data, std::uint64_t seed) {
    return dalbench::train(cfg.oracle_config(), data.train.features(), data.train.labels(),
                           data.train.class_count(), derive_seed(seed, 0, "oracle"));
}

ExperimentRun run_verification(const RunConfig& cfg, const TrainTest& data, std::uint64_t seed,
                               const FittedModel& oracle) {
    ExperimentRun run =
        run_cycles(cfg, data, seed, [&oracle](const FittedModel&) -> const FittedModel& { return oracle; });
    run.oracle_metric = evaluate(cfg, oracle, data.test);
    return run;
}

ExperimentRun run_verification(const RunConfig& cfg, const TrainTest& data, std::uint64_t seed) {
    return run_verification(cfg, data, seed, train_oracle(cfg, data, seed));
}

ExperimentRun run_verification(const RunConfig& cfg, std::uint64_t seed) {
    return run_verification(cfg, resolve_data(cfg.data), seed);
}

// ---------------------------------------------------------------------------
// Suites

Curve SuiteResult::curve() const {
    Curve c;
    c.name = std::string(to_string(config.strategy.name));
    for (std::size_t i = 0; i < mean_curve.size(); ++i) {
        c.points.push_back({static_cast<double>(labeled_counts[i]), mean_curve[i]});
    }
    return c;
}

SuiteResult run_suite(const RunConfig& cfg, const TrainTest& data) {
    cfg.validate();
    std::vector<std::uint64_t> seeds = cfg.seeds;
    std::sort(seeds.begin(), seeds.end());

    std::vector<std::optional<ExperimentRun>> runs(seeds.size());
    std::vector<std::exception_ptr> errors(seeds.size());
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next++; i < seeds.size(); i = next++) {
            try {
                runs[i] = cfg.mode == RunMode::Verification ? run_verification(cfg, data, seeds[i])
                                                            : run_experiment(cfg, data, seeds[i]);
            } catch (...) {
                errors[i] = std::current_exception();
            }
        }
    };
    const std::size_t threads =
        std::min<std::size_t>(seeds.size(), std::max(1u, std::thread::hardware_concurrency()));
    {
        std::vector<std::jthread> pool;
        for (std::size_t t = 1; t < threads; ++t) pool.emplace_back(worker);
        worker();
    }
    for (std::size_t i = 0; i < seeds.size(); ++i) {
        if (!errors[i]) continue;
        try {
            std::rethrow_exception(errors[i]);
        } catch (const std::exception& e) {
            throw std::runtime_error(fmt::format("seed {}: {}", seeds[i], e.what()));
        }
    }

    SuiteResult result{cfg, {}, {}, {}, std::nullopt};
    result.config.seeds = seeds;
    const auto cycles = static_cast<std::size_t>(cfg.cycles);
    result.mean_curve.assign(cycles, 0.0);
    double oracle_sum = 0.0;
    for (auto& r : runs) {
        for (std::size_t c = 0; c < cycles; ++c) result.mean_curve[c] += r->cycles[c].metric_value;
        if (r->oracle_metric) oracle_sum += *r->oracle_metric;
        result.per_seed.push_back(std::move(*r));
    }
    const double n = static_cast<double>(seeds.size());
    for (double& v : result.mean_curve) v /= n;
    for (std::size_t c = 0; c < cycles; ++c) {
        result.labeled_counts.push_back(result.per_seed.front().cycles[c].labeled_count);
    }
    if (cfg.mode == RunMode::Verification) result.mean_oracle_metric = oracle_sum / n;
    return result;
}

SuiteResult run_suite(const RunConfig& cfg) { return run_suite(cfg, resolve_data(cfg.data)); }

}  // namespace dalbench
