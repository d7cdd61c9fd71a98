#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "dalbench/clustering.hpp"
#include "dalbench/learners.hpp"
#include "dalbench/pooldata.hpp"

namespace dalbench {

enum class StrategyName { Random, Entropy, BatchBald, KMeans, Coreset, Badge, ClusterMargin };

std::string_view to_string(StrategyName name) noexcept;
/// Accepts the hyphenated names used in configs ("cluster-margin", ...).
StrategyName parse_strategy(std::string_view text);
const std::vector<StrategyName>& all_strategies();

/// Raised when a strategy is invoked without the model outputs it needs.
class ConfigurationError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

struct StrategyConfig {
    StrategyName name = StrategyName::Random;
    int mc_iterations = kDefaultMcIterations;
    double dropout_rate = kDefaultDropoutRate;
    int cm_multiplier = 10;
    /// Cluster Margin cluster count; 0 means 10 * batch size, fixed at the
    /// first strategic cycle.
    int cm_cluster_count = 0;

    void validate() const;
    bool needs_mc() const noexcept { return name == StrategyName::BatchBald; }
    bool needs_probs() const noexcept;
    bool needs_embeddings() const noexcept;
};

/// Model outputs over the current pool. Rows of `probs`, `mc_probs` slices,
/// `embed_unlabeled` and `clusters` follow the order of pool.unlabeled();
/// rows of `embed_labeled` follow pool.labeled().
struct ModelView {
    std::optional<ProbMatrix> probs;
    std::optional<ProbTensor> mc_probs;
    std::optional<EmbeddingMatrix> embed_unlabeled;
    std::optional<EmbeddingMatrix> embed_labeled;
    std::optional<ClusterAssignment> clusters;
};

using Scores = std::vector<double>;

/// Shannon entropy per row, natural log, 0 ln 0 = 0.
Scores entropy_scores(const ProbMatrix& probs);

/// Top-1 minus top-2 probability per row. Lower means more uncertain.
Scores margin_scores(const ProbMatrix& probs);

/// H(mean prediction) - mean H(prediction) across MC repetitions, clamped at 0.
Scores bald_scores(const ProbTensor& tensor);

/// Picks b unlabeled indices with the largest (descending) or smallest
/// scores. Ties go to the lower dataset index; output is in score order.
QueryBatch select_top(const Scores& scores, const PoolState& pool, std::size_t b, bool descending);

QueryBatch select_random(const PoolState& pool, std::size_t b, std::uint64_t seed);

/// Greedy k-center (max-min distance to labeled plus already picked).
QueryBatch kcenter_greedy(const EmbeddingMatrix& embed_unlabeled, const EmbeddingMatrix& embed_labeled,
                          const PoolState& pool, std::size_t b);

/// One pick per k-means cluster (k = b): the member closest to its centroid.
QueryBatch select_kmeans(const EmbeddingMatrix& embed_unlabeled, const PoolState& pool, std::size_t b,
                         std::uint64_t seed);

/// Rows (p - onehot(argmax p)) kron h, width K * d_h.
Matrix badge_embeddings(const ProbMatrix& probs, const EmbeddingMatrix& embedding);

QueryBatch select_badge(const ProbMatrix& probs, const EmbeddingMatrix& embed_unlabeled,
                        const PoolState& pool, std::size_t b, std::uint64_t seed);

/// Takes the min(m*b, |U|) lowest-margin samples, groups them by cluster,
/// and draws round-robin from the smallest groups first.
QueryBatch select_cluster_margin(const ProbMatrix& probs, const ClusterAssignment& clusters,
                                 const PoolState& pool, std::size_t b, std::size_t multiplier,
                                 std::uint64_t seed);

QueryBatch select(const StrategyConfig& strategy, const ModelView& view, const PoolState& pool,
                  std::size_t b, std::uint64_t seed);

}  // namespace dalbench
