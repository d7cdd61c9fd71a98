// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on failure.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <limits>
#include <map>
#include <numbers>
#include <numeric>
#include <random>
#include <set>
#include <sstream>
#include <string>

#include <fmt/format.h>

#include "dalbench/clustering.hpp"
#include "dalbench/learners.hpp"
#include "dalbench/loop.hpp"
#include "dalbench/report.hpp"
#include "dalbench/strategies.hpp"

using namespace dalbench;
namespace fs = std::filesystem;

namespace {

struct Outcome {
    bool ok = false;
    std::string detail;
};

Matrix rows(std::initializer_list<std::initializer_list<double>> r) {
    Matrix m(static_cast<Eigen::Index>(r.size()), static_cast<Eigen::Index>(r.begin()->size()));
    Eigen::Index i = 0;
    for (const auto& row : r) {
        Eigen::Index j = 0;
        for (double v : row) m(i, j++) = v;
        ++i;
    }
    return m;
}

Matrix gaussian(std::mt19937_64& rng, Eigen::Index n, Eigen::Index d) {
    std::normal_distribution<double> g(0.0, 1.0);
    Matrix m(n, d);
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = g(rng);
    return m;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream s;
    s << in.rdbuf();
    return s.str();
}

// 4 classes on the unit grid in 2-D, 750 each, split 2000 / 1000.
GeneratedSource grid_source() {
    GeneratedSource src;
    src.mixture.class_count = 4;
    src.mixture.dims = 2;
    src.mixture.per_class_counts = {750, 750, 750, 750};
    src.mixture.class_means = grid_means(4, 2, 1.0);
    src.mixture.class_stddev = 0.3;
    src.mixture.seed = 11;
    src.train_fraction = 2.0 / 3.0;
    return src;
}

// Binary 95:5 mixture, split 2000 / 1000.
GeneratedSource imbalanced_source() {
    GeneratedSource src;
    src.mixture.class_count = 2;
    src.mixture.dims = 2;
    src.mixture.per_class_counts = {2850, 150};
    src.mixture.class_means = grid_means(2, 2, 1.0);
    src.mixture.class_stddev = 0.3;
    src.mixture.seed = 11;
    src.train_fraction = 2.0 / 3.0;
    return src;
}

Outcome score_oracles() {
    const double ln2 = std::numbers::ln2;
    const double h = entropy_scores(rows({{0.5, 0.5}}))[0];
    const double bald = bald_scores(ProbTensor{{rows({{1.0, 0.0}}), rows({{0.0, 1.0}})}})[0];
    const double m = margin_scores(rows({{0.6, 0.3, 0.1}}))[0];
    const bool ok = std::abs(h - ln2) <= 1e-6 && std::abs(bald - ln2) <= 1e-6 && std::abs(m - 0.3) <= 1e-6;
    return {ok, fmt::format("entropy={:.9f} bald={:.9f} margin={:.9f}", h, bald, m)};
}

IndexList brute_kcenter(const Matrix& eu, const Matrix& el, const IndexList& u, std::size_t b) {
    IndexList chosen_rows, out;
    for (std::size_t step = 0; step < b; ++step) {
        double best = -1.0;
        std::size_t best_row = 0;
        for (std::size_t i = 0; i < u.size(); ++i) {
            if (std::find(chosen_rows.begin(), chosen_rows.end(), i) != chosen_rows.end()) continue;
            double nearest = std::numeric_limits<double>::infinity();
            for (Eigen::Index j = 0; j < el.rows(); ++j) {
                nearest = std::min(nearest, (eu.row(static_cast<Eigen::Index>(i)) - el.row(j)).norm());
            }
            for (auto r : chosen_rows) {
                nearest = std::min(nearest, (eu.row(static_cast<Eigen::Index>(i)) -
                                             eu.row(static_cast<Eigen::Index>(r))).norm());
            }
            if (nearest > best || (nearest == best && u[i] < u[best_row])) {
                best = nearest;
                best_row = i;
            }
        }
        chosen_rows.push_back(best_row);
        out.push_back(u[best_row]);
    }
    return out;
}

Outcome kcenter_equivalence() {
    std::mt19937_64 rng(20240501);
    int mismatches = 0;
    const int instances = 200;
    for (int t = 0; t < instances; ++t) {
        const std::size_t nl = 1 + rng() % 3, nu = 1 + rng() % 12;
        const Eigen::Index d = 1 + static_cast<Eigen::Index>(rng() % 3);
        IndexList all(nl + nu);
        std::iota(all.begin(), all.end(), std::size_t{0});
        std::shuffle(all.begin(), all.end(), rng);
        IndexList l(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(nl));
        IndexList u(all.begin() + static_cast<std::ptrdiff_t>(nl), all.end());
        std::sort(u.begin(), u.end());
        const PoolState pool(l, u, nl + nu);
        const Matrix eu = gaussian(rng, static_cast<Eigen::Index>(nu), d);
        const Matrix el = gaussian(rng, static_cast<Eigen::Index>(nl), d);
        const std::size_t b = 1 + rng() % nu;
        mismatches += kcenter_greedy(eu, el, pool, b).indices != brute_kcenter(eu, el, u, b);
    }
    return {mismatches == 0, fmt::format("{} of {} instances differ", mismatches, instances)};
}

Outcome badge_norm_identity() {
    std::mt19937_64 rng(77);
    std::gamma_distribution<double> gam(0.7, 1.0);
    double worst = 0.0;
    for (int t = 0; t < 1000; ++t) {
        const Eigen::Index k = 2 + static_cast<Eigen::Index>(rng() % 9);
        const Eigen::Index dh = 1 + static_cast<Eigen::Index>(rng() % 64);
        Matrix p(1, k);
        for (Eigen::Index j = 0; j < k; ++j) p(0, j) = gam(rng);
        p /= p.sum();
        const Matrix h = gaussian(rng, 1, dh);
        Eigen::Index yhat = 0;
        p.row(0).maxCoeff(&yhat);
        Eigen::RowVectorXd r = p.row(0);
        r(yhat) -= 1.0;
        worst = std::max(worst, std::abs(badge_embeddings(p, h).norm() - r.norm() * h.norm()));
    }
    return {worst <= 1e-9, fmt::format("max |difference| = {:.3e}", worst)};
}

Outcome kmeanspp_weighting() {
    Matrix x(3, 1);
    x << 0.0, 1.0, 4.0;
    const int draws = 100000;
    int far = 0;
    for (int s = 0; s < draws; ++s) {
        Rng rng(derive_seed(2024, static_cast<std::uint64_t>(s), "kmeanspp"));
        far += kmeanspp_extend(x, {0}, 2, rng)[1] == 2;
    }
    const double freq = static_cast<double>(far) / draws;
    return {std::abs(freq - 16.0 / 17.0) <= 0.01, fmt::format("frequency {:.5f} vs {:.5f}", freq, 16.0 / 17.0)};
}

Outcome determinism() {
    RunConfig cfg;
    cfg.data = grid_source();
    cfg.strategy.name = StrategyName::Badge;
    const TrainTest data = resolve_data(cfg.data);
    const fs::path base = fs::temp_directory_path() / "dalbench_acceptance_determinism";
    fs::remove_all(base);
    const std::vector<SuiteResult> a{run_suite(cfg, data)};
    const std::vector<SuiteResult> b{run_suite(cfg, data)};
    const ResultFiles fa = write_results(a, base / "a");
    const ResultFiles fb = write_results(b, base / "b");
    bool same_queries = true;
    for (std::size_t s = 0; s < a[0].per_seed.size(); ++s) {
        for (std::size_t c = 0; c < a[0].per_seed[s].cycles.size(); ++c) {
            same_queries &= a[0].per_seed[s].cycles[c].queried == b[0].per_seed[s].cycles[c].queried;
        }
    }
    const bool same_csv = slurp(fa.curves) == slurp(fb.curves) && !slurp(fa.curves).empty();
    const bool same_query_csv = slurp(fa.queries) == slurp(fb.queries);
    return {same_queries && same_csv && same_query_csv,
            fmt::format("curves.csv identical={} queries identical={}", same_csv, same_queries && same_query_csv)};
}

Outcome protocol_invariants() {
    std::vector<std::string> problems;
    const auto odd = budget_schedule(2421, 0.1, 10);
    if (odd[0] != 243) problems.push_back(fmt::format("schedule(2421)[0] = {}", odd[0]));

    // Train set of exactly 2421 samples.
    MixtureSpec train_spec = grid_source().mixture;
    train_spec.per_class_counts = {606, 605, 605, 605};
    MixtureSpec test_spec = train_spec;
    test_spec.per_class_counts = {100, 100, 100, 100};
    test_spec.seed = 12;
    const TrainTest data{generate_mixture(train_spec), generate_mixture(test_spec)};

    for (StrategyName name : all_strategies()) {
        RunConfig cfg;
        cfg.data = InMemorySource{};
        cfg.strategy.name = name;
        cfg.learner.epochs = 50;
        cfg.cycles = 10;
        cfg.budget_fraction = 0.1;
        const ExperimentRun run = run_experiment(cfg, data, 1);
        std::vector<int> seen(data.train.size(), 0);
        std::size_t total = 0;
        for (std::size_t c = 0; c < run.cycles.size(); ++c) {
            const CycleRecord& rec = run.cycles[c];
            total += odd[c];
            if (rec.queried.size() != odd[c] || rec.labeled_count != total) {
                problems.push_back(fmt::format("{} cycle {}: |Q|={} |L|={}", to_string(name), c,
                                               rec.queried.size(), rec.labeled_count));
            }
            for (auto i : rec.queried.indices) {
                if (i >= seen.size() || seen[i]++ != 0) {
                    problems.push_back(fmt::format("{} cycle {}: index {} reused", to_string(name), c, i));
                }
            }
        }
        if (run.cycles.size() != 10 || run.cycles[0].queried.size() != 243) {
            problems.push_back(fmt::format("{}: cycle-0 batch {}", to_string(name), run.cycles[0].queried.size()));
        }
    }
    return {problems.empty(),
            problems.empty() ? "schedule [243, 242 x 9] held for all strategies" : problems.front()};
}

Outcome strategies_vs_random() {
    RunConfig cfg;
    cfg.data = grid_source();
    const TrainTest data = resolve_data(cfg.data);
    if (data.train.size() != 2000 || data.test.size() != 1000) {
        return {false, fmt::format("split {} / {}", data.train.size(), data.test.size())};
    }
    double oracle_lo = 1.0, oracle_hi = 0.0;
    for (std::uint64_t seed : cfg.seeds) {
        const double acc = evaluate(cfg, train_oracle(cfg, data, seed), data.test);
        oracle_lo = std::min(oracle_lo, acc);
        oracle_hi = std::max(oracle_hi, acc);
    }
    const bool band = oracle_lo >= 0.85 && oracle_hi <= 0.95;

    std::map<StrategyName, double> area;
    for (StrategyName s : {StrategyName::Random, StrategyName::Entropy, StrategyName::Coreset, StrategyName::Badge}) {
        RunConfig sc = cfg;
        sc.strategy.name = s;
        area[s] = aubc(run_suite(sc, data).curve());
    }
    const double r = area[StrategyName::Random];
    bool within = true, beats = false;
    for (StrategyName s : {StrategyName::Entropy, StrategyName::Coreset, StrategyName::Badge}) {
        within &= area[s] >= r - 0.005;
        beats |= area[s] > r;
    }
    return {band && within && beats,
            fmt::format("oracle acc {:.4f}..{:.4f}; aubc random={:.5f} entropy={:.5f} coreset={:.5f} badge={:.5f}",
                        oracle_lo, oracle_hi, r, area[StrategyName::Entropy], area[StrategyName::Coreset],
                        area[StrategyName::Badge])};
}

Outcome imbalance_minority() {
    RunConfig cfg;
    cfg.data = imbalanced_source();
    cfg.strategy.mc_iterations = 40;
    cfg.strategy.dropout_rate = 0.5;
    const TrainTest data = resolve_data(cfg.data);
    auto minority = [&](StrategyName s) {
        RunConfig sc = cfg;
        sc.strategy.name = s;
        const SuiteResult suite = run_suite(sc, data);
        std::vector<double> mean(4, 0.0);
        for (const auto& run : suite.per_seed) {
            for (std::size_t c = 1; c <= 3; ++c) mean[c] += static_cast<double>(run.cycles[c].per_class_labeled[1]);
        }
        for (double& v : mean) v /= static_cast<double>(suite.per_seed.size());
        return mean;
    };
    const auto bald = minority(StrategyName::BatchBald);
    const auto rnd = minority(StrategyName::Random);
    bool ok = true;
    for (std::size_t c = 1; c <= 3; ++c) ok &= bald[c] > rnd[c];
    return {ok, fmt::format("minority labeled after cycles 1-3: batchbald {:.1f}/{:.1f}/{:.1f}, random "
                            "{:.1f}/{:.1f}/{:.1f}",
                            bald[1], bald[2], bald[3], rnd[1], rnd[2], rnd[3])};
}

bool same_queries(const ExperimentRun& a, const ExperimentRun& b) {
    if (a.cycles.size() != b.cycles.size()) return false;
    for (std::size_t c = 0; c < a.cycles.size(); ++c) {
        if (a.cycles[c].queried != b.cycles[c].queried) return false;
    }
    return true;
}

Outcome verification_contract() {
    RunConfig cfg;
    cfg.data = grid_source();
    cfg.mode = RunMode::Verification;
    const TrainTest data = resolve_data(cfg.data);
    std::vector<std::string> problems;
    for (StrategyName s : {StrategyName::Entropy, StrategyName::Coreset, StrategyName::Badge, StrategyName::BatchBald}) {
        RunConfig a = cfg;
        a.strategy.name = s;
        a.strategy.mc_iterations = 10;
        const FittedModel oracle = train_oracle(a, data, 0);
        RunConfig b = a;
        b.learner.epochs = 30;
        if (!same_queries(run_verification(a, data, 0, oracle), run_verification(b, data, 0, oracle))) {
            problems.push_back(fmt::format("{}: queries depend on evaluation epochs", to_string(s)));
        }
        RunConfig standard = a;
        standard.mode = RunMode::Standard;
        const ExperimentRun per_cycle =
            run_cycles(standard, data, 0, [](const FittedModel& m) -> const FittedModel& { return m; });
        if (!same_queries(per_cycle, run_experiment(standard, data, 0))) {
            problems.push_back(fmt::format("{}: per-cycle substitution differs from standard", to_string(s)));
        }
    }
    return {problems.empty(), problems.empty() ? "entropy, coreset, badge, batchbald" : problems.front()};
}

Outcome dropout_degeneracy() {
    const TrainTest data = resolve_data(grid_source());
    LearnerConfig lc;
    lc.epochs = 20;
    const FittedModel model = train(lc, data.train.features(), data.train.labels(), 4, 3);
    const Matrix& x = data.test.features();
    const ProbTensor t = mc_predict(model, x, kDefaultMcIterations, 0.0, 9);
    const Matrix p = predict_proba(model, x);
    bool identical = t.repetitions() == kDefaultMcIterations;
    for (const Matrix& s : t.samples) identical &= s == p;
    const Scores bald = bald_scores(t);
    const double worst = *std::max_element(bald.begin(), bald.end());
    return {identical && worst <= 1e-9, fmt::format("slices identical={} max bald={:.3e}", identical, worst)};
}

Outcome gradient_check() {
    std::mt19937_64 rng(11);
    double worst = 0.0;
    const double eps = 1e-5;
    for (int t = 0; t < 50; ++t) {
        const Eigen::Index n = 1 + static_cast<Eigen::Index>(rng() % 20);
        const Eigen::Index d = 1 + static_cast<Eigen::Index>(rng() % 6);
        const Eigen::Index k = 2 + static_cast<Eigen::Index>(rng() % 4);
        const Matrix h = gaussian(rng, n, d);
        const Matrix w = gaussian(rng, d, k);
        const Matrix bm = gaussian(rng, 1, k);
        const Vector b = bm.row(0).transpose();
        Labels y(static_cast<std::size_t>(n));
        for (auto& v : y) v = static_cast<Label>(rng() % static_cast<std::uint64_t>(k));
        const double l2 = 5e-4;
        const HeadLoss an = softmax_head_loss(h, y, w, b, l2);
        auto rel = [](double a, double f) { return std::abs(a - f) / std::max({std::abs(a), std::abs(f), 1e-8}); };
        for (Eigen::Index i = 0; i < w.size(); ++i) {
            Matrix wp = w, wm = w;
            wp.data()[i] += eps;
            wm.data()[i] -= eps;
            const double fd =
                (softmax_head_loss(h, y, wp, b, l2).value - softmax_head_loss(h, y, wm, b, l2).value) / (2 * eps);
            worst = std::max(worst, rel(an.grad_weights.data()[i], fd));
        }
        for (Eigen::Index i = 0; i < b.size(); ++i) {
            Vector bp = b, bn = b;
            bp(i) += eps;
            bn(i) -= eps;
            const double fd =
                (softmax_head_loss(h, y, w, bp, l2).value - softmax_head_loss(h, y, w, bn, l2).value) / (2 * eps);
            worst = std::max(worst, rel(an.grad_bias(i), fd));
        }
    }
    return {worst <= 1e-4, fmt::format("max relative error {:.3e}", worst)};
}

struct Criterion {
    int id;
    std::string name;
    double limit_seconds;
    std::function<Outcome()> check;
};

}  // namespace

int main() {
    const std::vector<Criterion> criteria{
        {1, "score oracles", 1.0, score_oracles},
        {2, "k-center greedy matches brute force", 10.0, kcenter_equivalence},
        {3, "BADGE norm identity", 1.0, badge_norm_identity},
        {4, "k-means++ D^2 weighting", 5.0, kmeanspp_weighting},
        {5, "determinism", 120.0, determinism},
        {6, "protocol invariants", 120.0, protocol_invariants},
        {7, "strategies vs random on a 4-class grid", 300.0, strategies_vs_random},
        {8, "batchbald favours the minority class", 300.0, imbalance_minority},
        {9, "verification-mode contract", 120.0, verification_contract},
        {10, "zero-dropout degeneracy", 1.0, dropout_degeneracy},
        {11, "logistic gradient check", 5.0, gradient_check},
    };
    int failures = 0;
    for (const Criterion& c : criteria) {
        const auto start = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = c.check();
        } catch (const std::exception& e) {
            o = {false, fmt::format("exception: {}", e.what())};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        const bool in_time = secs < c.limit_seconds;
        const bool pass = o.ok && in_time;
        failures += !pass;
        std::cout << fmt::format("[{}] criterion {}: {} ({}; {:.2f}s, limit {:.0f}s{})\n", pass ? "PASS" : "FAIL",
                                 c.id, c.name, o.detail, secs, c.limit_seconds, in_time ? "" : ", too slow")
                  << std::flush;
    }
    std::cout << fmt::format("{} of {} criteria passed\n", criteria.size() - static_cast<std::size_t>(failures),
                             criteria.size());
    return failures == 0 ? 0 : 1;
}
