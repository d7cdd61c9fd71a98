#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <memory>
#include <span>
#include <vector>

#include "dalbench/pooldata.hpp"

namespace dalbench {

enum class LearnerKind { MultinomialLogistic, NearestCentroid };

/// Parameters of a logistic model: a fixed random lift plus a softmax head.
///
/// The lift maps standardized inputs to a rectified hidden layer,
/// h = max(0, x * lift_weights + lift_bias); the head computes logits
/// h * head_weights + head_bias. Nearest-centroid models only use
/// `centroids` and `class_counts` (classes with no training samples get
/// probability zero).
struct ModelWeights {
    LearnerKind kind = LearnerKind::MultinomialLogistic;
    int class_count = 0;
    Vector feature_mean;    // d
    Vector feature_scale;   // d, stddev clamped to 1 for constant features
    Matrix lift_weights;    // d x d_h
    Vector lift_bias;       // d_h
    Matrix head_weights;    // d_h x K
    Vector head_bias;       // K
    Matrix centroids;       // K x d (standardized space)
    Vector class_counts;    // K
};

/// Exact (bitwise-value) equality of every parameter, shapes included.
bool same_weights(const ModelWeights& a, const ModelWeights& b);

/// Serializes weights as text under the `ALQW1` magic header.
void write_weights(std::ostream& out, const ModelWeights& w);
ModelWeights read_weights(std::istream& in);
void save_weights(const ModelWeights& w, const std::filesystem::path& path);
ModelWeights load_weights(const std::filesystem::path& path);

struct LearnerConfig {
    LearnerKind kind = LearnerKind::MultinomialLogistic;
    int epochs = 200;
    int batch_size = 20;
    double learning_rate = 0.01;
    double momentum = 0.9;
    double weight_decay = 0.0005;
    bool cosine_decay = true;
    int hidden_dim = 32;
    /// Starting weights loaded verbatim; scratch initialization when empty.
    std::shared_ptr<const ModelWeights> pretrained;

    void validate() const;
};

class FittedModel {
public:
    /// Checks shape consistency and finiteness.
    explicit FittedModel(ModelWeights weights, std::uint64_t train_seed = 0);

    LearnerKind kind() const noexcept { return weights_.kind; }
    int class_count() const noexcept { return weights_.class_count; }
    std::size_t feature_dim() const noexcept {
        return static_cast<std::size_t>(weights_.feature_mean.size());
    }
    std::size_t embedding_dim() const noexcept;
    std::uint64_t train_seed() const noexcept { return train_seed_; }
    const ModelWeights& weights() const noexcept { return weights_; }

    /// z-scored copy of X using the training statistics.
    Matrix standardize(const Matrix& x) const;

    /// Row-wise class probabilities from an embedding (the head only).
    Matrix head_proba(const Matrix& embedding) const;

private:
    ModelWeights weights_;
    std::uint64_t train_seed_;
};

/// Each row a probability vector over K classes.
using ProbMatrix = Matrix;
using EmbeddingMatrix = Matrix;

/// T stochastic repetitions of a ProbMatrix.
struct ProbTensor {
    std::vector<ProbMatrix> samples;

    std::size_t repetitions() const noexcept { return samples.size(); }
};

inline constexpr int kDefaultMcIterations = 40;
inline constexpr double kDefaultDropoutRate = 0.5;

FittedModel train(const LearnerConfig& cfg, const Matrix& features, std::span<const Label> labels,
                  int class_count, std::uint64_t seed);

ProbMatrix predict_proba(const FittedModel& model, const Matrix& x);
EmbeddingMatrix embed(const FittedModel& model, const Matrix& x);

/// MC dropout on the embedding: T passes with independent keep masks.
ProbTensor mc_predict(const FittedModel& model, const Matrix& x, int repetitions = kDefaultMcIterations,
                      double dropout_rate = kDefaultDropoutRate, std::uint64_t seed = 0);

/// Argmax of predict_proba, ties to the lowest class id.
Labels predict_labels(const FittedModel& model, const Matrix& x);

/// Row-wise argmax with ties to the lowest column.
Labels argmax_rows(const Matrix& probs);

/// Row-wise numerically stable softmax.
Matrix softmax_rows(const Matrix& logits);

/// Mean cross-entropy of a softmax head plus an L2 term (l2/2)*||W||^2 on the
/// head weights, and its analytic gradient.
struct HeadLoss {
    double value = 0.0;
    Matrix grad_weights;  // d_h x K
    Vector grad_bias;     // K
};

HeadLoss softmax_head_loss(const Matrix& embedding, std::span<const Label> labels,
                           const Matrix& head_weights, const Vector& head_bias, double l2);

}  // namespace dalbench
