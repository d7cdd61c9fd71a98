#include "dalbench/strategies.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numeric>

#include <fmt/format.h>

#include "dalbench/rng.hpp"

namespace dalbench {

namespace {

constexpr std::array<std::pair<StrategyName, std::string_view>, 7> kNames{{
    {StrategyName::Random, "random"},
    {StrategyName::Entropy, "entropy"},
    {StrategyName::BatchBald, "batchbald"},
    {StrategyName::KMeans, "kmeans"},
    {StrategyName::Coreset, "coreset"},
    {StrategyName::Badge, "badge"},
    {StrategyName::ClusterMargin, "cluster-margin"},
}};

void require_budget(const PoolState& pool, std::size_t b) {
    if (b > pool.unlabeled().size()) {
        throw ValidationError(
            fmt::format("batch size {} exceeds {} unlabeled samples", b, pool.unlabeled().size()));
    }
}

void require_rows(const Matrix& m, std::size_t rows, const char* what) {
    if (static_cast<std::size_t>(m.rows()) != rows) {
        throw ValidationError(fmt::format("{} has {} rows, expected {}", what, m.rows(), rows));
    }
}

double row_entropy(const Eigen::Ref<const Eigen::RowVectorXd>& p) {
    double h = 0.0;
    for (Eigen::Index k = 0; k < p.size(); ++k) {
        if (p(k) > 0.0) h -= p(k) * std::log(p(k));
    }
    return h;
}

}  // namespace

std::string_view to_string(StrategyName name) noexcept {
    for (const auto& [n, s] : kNames) {
        if (n == name) return s;
    }
    return "unknown";
}

StrategyName parse_strategy(std::string_view text) {
    for (const auto& [n, s] : kNames) {
        if (s == text) return n;
    }
    if (text == "cluster_margin") return StrategyName::ClusterMargin;
    if (text == "k-means") return StrategyName::KMeans;
    if (text == "core-set") return StrategyName::Coreset;
    throw ValidationError(fmt::format("unknown strategy '{}'", text));
}

const std::vector<StrategyName>& all_strategies() {
    static const std::vector<StrategyName> names = [] {
        std::vector<StrategyName> v;
        for (const auto& entry : kNames) v.push_back(entry.first);
        return v;
    }();
    return names;
}

void StrategyConfig::validate() const {
    if (mc_iterations < 1) throw ValidationError("mc_T must be >= 1");
    if (!(dropout_rate >= 0.0 && dropout_rate < 1.0)) throw ValidationError("dropout_rate must be in [0,1)");
    if (cm_multiplier < 1) throw ValidationError("cm_multiplier must be >= 1");
    if (cm_cluster_count < 0) throw ValidationError("cm_cluster_count must be >= 0");
}

bool StrategyConfig::needs_probs() const noexcept {
    return name == StrategyName::Entropy || name == StrategyName::Badge ||
           name == StrategyName::ClusterMargin;
}

bool StrategyConfig::needs_embeddings() const noexcept {
    return name == StrategyName::KMeans || name == StrategyName::Coreset ||
           name == StrategyName::Badge || name == StrategyName::ClusterMargin;
}

// ---------------------------------------------------------------------------
// Scores

Scores entropy_scores(const ProbMatrix& probs) {
    Scores out(static_cast<std::size_t>(probs.rows()));
    for (Eigen::Index i = 0; i < probs.rows(); ++i) out[static_cast<std::size_t>(i)] = row_entropy(probs.row(i));
    return out;
}

Scores margin_scores(const ProbMatrix& probs) {
    if (probs.cols() < 2) throw ValidationError("margin needs at least two classes");
    Scores out(static_cast<std::size_t>(probs.rows()));
    for (Eigen::Index i = 0; i < probs.rows(); ++i) {
        double first = -std::numeric_limits<double>::infinity();
        double second = first;
        for (Eigen::Index k = 0; k < probs.cols(); ++k) {
            const double p = probs(i, k);
            if (p > first) {
                second = first;
                first = p;
            } else if (p > second) {
                second = p;
            }
        }
        out[static_cast<std::size_t>(i)] = first - second;
    }
    return out;
}

Scores bald_scores(const ProbTensor& tensor) {
    if (tensor.samples.empty()) throw ValidationError("BALD needs at least one MC repetition");
    const Matrix& first = tensor.samples.front();
    Matrix mean = Matrix::Zero(first.rows(), first.cols());
    Scores expected(static_cast<std::size_t>(first.rows()), 0.0);
    for (const Matrix& slice : tensor.samples) {
        if (slice.rows() != first.rows() || slice.cols() != first.cols()) {
            throw ValidationError("MC slices differ in shape");
        }
        mean += slice;
        for (Eigen::Index i = 0; i < slice.rows(); ++i) {
            expected[static_cast<std::size_t>(i)] += row_entropy(slice.row(i));
        }
    }
    const double t = static_cast<double>(tensor.samples.size());
    mean /= t;
    Scores out(expected.size());
    for (std::size_t i = 0; i < out.size(); ++i) {
        const double mi = row_entropy(mean.row(static_cast<Eigen::Index>(i))) - expected[i] / t;
        out[i] = std::max(mi, 0.0);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Selection rules

QueryBatch select_top(const Scores& scores, const PoolState& pool, std::size_t b, bool descending) {
    const IndexList& u = pool.unlabeled();
    if (scores.size() != u.size()) {
        throw ValidationError(fmt::format("{} scores for {} unlabeled samples", scores.size(), u.size()));
    }
    require_budget(pool, b);
    std::vector<std::size_t> order(u.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    auto better = [&](std::size_t a, std::size_t c) {
        if (scores[a] != scores[c]) return descending ? scores[a] > scores[c] : scores[a] < scores[c];
        return u[a] < u[c];
    };
    std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(b), order.end(), better);
    QueryBatch out;
    out.indices.reserve(b);
    for (std::size_t i = 0; i < b; ++i) out.indices.push_back(u[order[i]]);
    return out;
}

QueryBatch select_random(const PoolState& pool, std::size_t b, std::uint64_t seed) {
    require_budget(pool, b);
    IndexList u = pool.unlabeled();
    Rng rng(seed);
    for (std::size_t i = 0; i < b; ++i) {
        std::uniform_int_distribution<std::size_t> pick(i, u.size() - 1);
        std::swap(u[i], u[pick(rng)]);
    }
    u.resize(b);
    return {std::move(u), 0};
}

QueryBatch kcenter_greedy(const EmbeddingMatrix& embed_unlabeled, const EmbeddingMatrix& embed_labeled,
                          const PoolState& pool, std::size_t b) {
    const IndexList& u = pool.unlabeled();
    require_budget(pool, b);
    require_rows(embed_unlabeled, u.size(), "unlabeled embedding");
    require_rows(embed_labeled, pool.labeled().size(), "labeled embedding");
    if (embed_labeled.rows() == 0) throw ValidationError("k-center greedy needs a nonempty labeled set");
    if (embed_labeled.cols() != embed_unlabeled.cols()) throw ValidationError("embedding widths differ");

    std::vector<double> cover(u.size(), std::numeric_limits<double>::infinity());
    auto absorb = [&](const auto& center) {
        for (std::size_t i = 0; i < u.size(); ++i) {
            const double d = (embed_unlabeled.row(static_cast<Eigen::Index>(i)) - center).norm();
            cover[i] = std::min(cover[i], d);
        }
    };
    for (Eigen::Index j = 0; j < embed_labeled.rows(); ++j) absorb(embed_labeled.row(j));

    std::vector<char> picked(u.size(), 0);
    QueryBatch out;
    out.indices.reserve(b);
    for (std::size_t step = 0; step < b; ++step) {
        std::size_t best = u.size();
        for (std::size_t i = 0; i < u.size(); ++i) {
            if (picked[i]) continue;
            if (best == u.size() || cover[i] > cover[best] || (cover[i] == cover[best] && u[i] < u[best])) {
                best = i;
            }
        }
        picked[best] = 1;
        out.indices.push_back(u[best]);
        const Eigen::RowVectorXd center = embed_unlabeled.row(static_cast<Eigen::Index>(best));
        absorb(center);
    }
    return out;
}

QueryBatch select_kmeans(const EmbeddingMatrix& embed_unlabeled, const PoolState& pool, std::size_t b,
                         std::uint64_t seed) {
    const IndexList& u = pool.unlabeled();
    require_budget(pool, b);
    require_rows(embed_unlabeled, u.size(), "unlabeled embedding");
    QueryBatch out;
    if (b == 0) return out;
    const KMeansResult km = kmeans_cluster(embed_unlabeled, b, seed);
    std::vector<std::size_t> best(b, u.size());
    std::vector<double> best_d(b, std::numeric_limits<double>::infinity());
    for (std::size_t i = 0; i < u.size(); ++i) {
        const auto c = static_cast<std::size_t>(km.clusters.assignment[i]);
        const double d = (embed_unlabeled.row(static_cast<Eigen::Index>(i)) -
                          km.centroids.row(static_cast<Eigen::Index>(c)))
                             .norm();
        if (best[c] == u.size() || d < best_d[c] || (d == best_d[c] && u[i] < u[best[c]])) {
            best[c] = i;
            best_d[c] = d;
        }
    }
    out.indices.reserve(b);
    for (std::size_t c = 0; c < b; ++c) out.indices.push_back(u[best[c]]);
    return out;
}

Matrix badge_embeddings(const ProbMatrix& probs, const EmbeddingMatrix& embedding) {
    if (probs.rows() != embedding.rows()) {
        throw ValidationError(fmt::format("{} probability rows vs {} embedding rows", probs.rows(),
                                          embedding.rows()));
    }
    const auto k = probs.cols();
    const auto h = embedding.cols();
    const Labels guess = argmax_rows(probs);
    Matrix g(probs.rows(), k * h);
    for (Eigen::Index i = 0; i < probs.rows(); ++i) {
        for (Eigen::Index c = 0; c < k; ++c) {
            const double residual = probs(i, c) - (c == guess[static_cast<std::size_t>(i)] ? 1.0 : 0.0);
            g.row(i).segment(c * h, h) = residual * embedding.row(i);
        }
    }
    return g;
}

QueryBatch select_badge(const ProbMatrix& probs, const EmbeddingMatrix& embed_unlabeled,
                        const PoolState& pool, std::size_t b, std::uint64_t seed) {
    const IndexList& u = pool.unlabeled();
    require_budget(pool, b);
    require_rows(probs, u.size(), "probabilities");
    require_rows(embed_unlabeled, u.size(), "unlabeled embedding");
    QueryBatch out;
    if (b == 0) return out;
    const IndexList rows = kmeanspp_seed(badge_embeddings(probs, embed_unlabeled), b, seed);
    out.indices.reserve(b);
    for (std::size_t r : rows) out.indices.push_back(u[r]);
    return out;
}

QueryBatch select_cluster_margin(const ProbMatrix& probs, const ClusterAssignment& clusters,
                                 const PoolState& pool, std::size_t b, std::size_t multiplier,
                                 std::uint64_t seed) {
    const IndexList& u = pool.unlabeled();
    require_budget(pool, b);
    require_rows(probs, u.size(), "probabilities");
    if (clusters.assignment.size() != u.size()) {
        throw ValidationError("cluster assignment does not cover the unlabeled pool");
    }
    if (multiplier < 1) throw ValidationError("cluster margin multiplier must be >= 1");
    QueryBatch out;
    if (b == 0) return out;

    const QueryBatch candidates =
        select_top(margin_scores(probs), pool, std::min(multiplier * b, u.size()), false);

    std::vector<std::size_t> row_of(pool.dataset_size(), 0);
    for (std::size_t i = 0; i < u.size(); ++i) row_of[u[i]] = i;
    std::vector<IndexList> groups(static_cast<std::size_t>(clusters.k));
    for (std::size_t idx : candidates.indices) {
        const int c = clusters.assignment[row_of[idx]];
        if (c < 0 || c >= clusters.k) throw ValidationError("cluster id out of range");
        groups[static_cast<std::size_t>(c)].push_back(idx);
    }
    std::vector<std::size_t> order;
    for (std::size_t c = 0; c < groups.size(); ++c) {
        if (!groups[c].empty()) order.push_back(c);
    }
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t c) { return groups[a].size() < groups[c].size(); });

    Rng rng(seed);
    out.indices.reserve(b);
    while (out.indices.size() < b) {
        for (std::size_t c : order) {
            IndexList& g = groups[c];
            if (g.empty()) continue;
            std::uniform_int_distribution<std::size_t> pick(0, g.size() - 1);
            const auto at = g.begin() + static_cast<std::ptrdiff_t>(pick(rng));
            out.indices.push_back(*at);
            g.erase(at);
            if (out.indices.size() == b) break;
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Dispatch

QueryBatch select(const StrategyConfig& strategy, const ModelView& view, const PoolState& pool,
                  std::size_t b, std::uint64_t seed) {
    strategy.validate();
    const auto name = to_string(strategy.name);
    auto missing = [&](const char* field) {
        return ConfigurationError(fmt::format("strategy '{}' needs {} in the model view", name, field));
    };
    switch (strategy.name) {
        case StrategyName::Random:
            return select_random(pool, b, seed);
        case StrategyName::Entropy:
            if (!view.probs) throw missing("probs");
            require_rows(*view.probs, pool.unlabeled().size(), "probabilities");
            return select_top(entropy_scores(*view.probs), pool, b, true);
        case StrategyName::BatchBald:
            if (!view.mc_probs) throw missing("mc_probs");
            return select_top(bald_scores(*view.mc_probs), pool, b, true);
        case StrategyName::KMeans:
            if (!view.embed_unlabeled) throw missing("embed_unlabeled");
            return select_kmeans(*view.embed_unlabeled, pool, b, seed);
        case StrategyName::Coreset:
            if (!view.embed_unlabeled) throw missing("embed_unlabeled");
            if (!view.embed_labeled) throw missing("embed_labeled");
            return kcenter_greedy(*view.embed_unlabeled, *view.embed_labeled, pool, b);
        case StrategyName::Badge:
            if (!view.probs) throw missing("probs");
            if (!view.embed_unlabeled) throw missing("embed_unlabeled");
            return select_badge(*view.probs, *view.embed_unlabeled, pool, b, seed);
        case StrategyName::ClusterMargin:
            if (!view.probs) throw missing("probs");
            if (!view.clusters) throw missing("clusters");
            return select_cluster_margin(*view.probs, *view.clusters, pool, b,
                                         static_cast<std::size_t>(strategy.cm_multiplier), seed);
    }
    throw ConfigurationError("unhandled strategy");
}

}  // namespace dalbench
