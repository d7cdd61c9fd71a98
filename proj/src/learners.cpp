#include "dalbench/learners.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <numbers>
#include <numeric>
#include <ostream>
#include <sstream>
#include <string>

#include <fmt/format.h>

#include "dalbench/rng.hpp"

namespace dalbench {

namespace {

template <typename A, typename B>
bool same_array(const A& a, const B& b) {
    return a.rows() == b.rows() && a.cols() == b.cols() && (a.size() == 0 || a == b);
}

Vector row_stddev_clamped(const Matrix& x, const Vector& mean) {
    Vector scale(x.cols());
    for (Eigen::Index j = 0; j < x.cols(); ++j) {
        const double var = (x.col(j).array() - mean(j)).square().mean();
        const double sd = std::sqrt(var);
        scale(j) = sd > 1e-12 ? sd : 1.0;
    }
    return scale;
}

}  // namespace

bool same_weights(const ModelWeights& a, const ModelWeights& b) {
    return a.kind == b.kind && a.class_count == b.class_count &&
           same_array(a.feature_mean, b.feature_mean) &&
           same_array(a.feature_scale, b.feature_scale) &&
           same_array(a.lift_weights, b.lift_weights) && same_array(a.lift_bias, b.lift_bias) &&
           same_array(a.head_weights, b.head_weights) && same_array(a.head_bias, b.head_bias) &&
           same_array(a.centroids, b.centroids) && same_array(a.class_counts, b.class_counts);
}

// ---------------------------------------------------------------------------
// Config and model

void LearnerConfig::validate() const {
    if (epochs < 1) throw ValidationError("epochs must be >= 1");
    if (batch_size < 1) throw ValidationError("batch_size must be >= 1");
    if (!(learning_rate > 0.0)) throw ValidationError("learning_rate must be > 0");
    if (!(momentum >= 0.0 && momentum < 1.0)) throw ValidationError("momentum must be in [0,1)");
    if (!(weight_decay >= 0.0)) throw ValidationError("weight_decay must be >= 0");
    if (hidden_dim < 1) throw ValidationError("hidden_dim must be >= 1");
    if (pretrained && pretrained->kind != kind) {
        throw ValidationError("pretrained weights are for a different learner kind");
    }
}

FittedModel::FittedModel(ModelWeights weights, std::uint64_t train_seed)
    : weights_(std::move(weights)), train_seed_(train_seed) {
    const auto& w = weights_;
    const auto d = w.feature_mean.size();
    const auto k = w.class_count;
    auto bad = [](const char* what) { return ValidationError(fmt::format("model weights: {}", what)); };
    if (k < 2) throw bad("class_count must be >= 2");
    if (d < 1 || w.feature_scale.size() != d) throw bad("standardization shape");
    if ((w.feature_scale.array() <= 0.0).any()) throw bad("feature_scale must be positive");
    if (w.kind == LearnerKind::MultinomialLogistic) {
        const auto h = w.lift_weights.cols();
        if (w.lift_weights.rows() != d || h < 1 || w.lift_bias.size() != h) throw bad("lift shape");
        if (w.head_weights.rows() != h || w.head_weights.cols() != k || w.head_bias.size() != k) {
            throw bad("head shape");
        }
    } else {
        if (w.centroids.rows() != k || w.centroids.cols() != d || w.class_counts.size() != k) {
            throw bad("centroid shape");
        }
        if (!(w.class_counts.array() > 0.0).any()) throw bad("no class has training samples");
    }
    const bool finite = w.feature_mean.allFinite() && w.feature_scale.allFinite() &&
                        w.lift_weights.allFinite() && w.lift_bias.allFinite() &&
                        w.head_weights.allFinite() && w.head_bias.allFinite() &&
                        w.centroids.allFinite() && w.class_counts.allFinite();
    if (!finite) throw bad("non-finite parameter");
}

std::size_t FittedModel::embedding_dim() const noexcept {
    return weights_.kind == LearnerKind::MultinomialLogistic
               ? static_cast<std::size_t>(weights_.lift_weights.cols())
               : feature_dim();
}

Matrix FittedModel::standardize(const Matrix& x) const {
    if (static_cast<std::size_t>(x.cols()) != feature_dim()) {
        throw ValidationError(
            fmt::format("input has {} columns, model expects {}", x.cols(), feature_dim()));
    }
    Matrix z = x;
    z.rowwise() -= weights_.feature_mean.transpose();
    z.array().rowwise() /= weights_.feature_scale.transpose().array();
    return z;
}

Matrix softmax_rows(const Matrix& logits) {
    Matrix p(logits.rows(), logits.cols());
    for (Eigen::Index i = 0; i < logits.rows(); ++i) {
        const double m = logits.row(i).maxCoeff();
        double sum = 0.0;
        for (Eigen::Index k = 0; k < logits.cols(); ++k) {
            const double e = std::exp(logits(i, k) - m);
            p(i, k) = e;
            sum += e;
        }
        p.row(i) /= sum;
    }
    return p;
}

Matrix FittedModel::head_proba(const Matrix& embedding) const {
    if (static_cast<std::size_t>(embedding.cols()) != embedding_dim()) {
        throw ValidationError("embedding width does not match the model");
    }
    const auto& w = weights_;
    if (w.kind == LearnerKind::MultinomialLogistic) {
        Matrix logits = embedding * w.head_weights;
        logits.rowwise() += w.head_bias.transpose();
        return softmax_rows(logits);
    }
    const double neg_inf = -std::numeric_limits<double>::infinity();
    Matrix logits(embedding.rows(), w.class_count);
    for (Eigen::Index i = 0; i < embedding.rows(); ++i) {
        for (Eigen::Index k = 0; k < w.class_count; ++k) {
            logits(i, k) = w.class_counts(k) > 0.0
                               ? -(embedding.row(i) - w.centroids.row(k)).squaredNorm()
                               : neg_inf;
        }
    }
    return softmax_rows(logits);
}

// ---------------------------------------------------------------------------
// Training

HeadLoss softmax_head_loss(const Matrix& embedding, std::span<const Label> labels,
                           const Matrix& head_weights, const Vector& head_bias, double l2) {
    const auto n = embedding.rows();
    if (n < 1 || static_cast<std::size_t>(n) != labels.size()) {
        throw ValidationError("loss needs matching, nonempty embedding and labels");
    }
    Matrix logits = embedding * head_weights;
    logits.rowwise() += head_bias.transpose();
    Matrix residual = softmax_rows(logits);
    double loss = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
        const auto y = labels[static_cast<std::size_t>(i)];
        const double m = logits.row(i).maxCoeff();
        const double lse = m + std::log((logits.row(i).array() - m).exp().sum());
        loss += lse - logits(i, y);
        residual(i, y) -= 1.0;
    }
    const double inv_n = 1.0 / static_cast<double>(n);
    HeadLoss out;
    out.value = loss * inv_n + 0.5 * l2 * head_weights.squaredNorm();
    out.grad_weights = embedding.transpose() * residual * inv_n + l2 * head_weights;
    out.grad_bias = residual.colwise().sum().transpose() * inv_n;
    return out;
}

namespace {

Matrix lift(const Matrix& standardized, const ModelWeights& w) {
    Matrix h = standardized * w.lift_weights;
    h.rowwise() += w.lift_bias.transpose();
    return h.cwiseMax(0.0);
}

FittedModel train_centroids(const Matrix& z, std::span<const Label> labels, ModelWeights w,
                            std::uint64_t seed) {
    const int k = w.class_count;
    w.centroids = Matrix::Zero(k, z.cols());
    w.class_counts = Vector::Zero(k);
    for (Eigen::Index i = 0; i < z.rows(); ++i) {
        const auto y = labels[static_cast<std::size_t>(i)];
        w.centroids.row(y) += z.row(i);
        w.class_counts(y) += 1.0;
    }
    for (int c = 0; c < k; ++c) {
        if (w.class_counts(c) > 0.0) w.centroids.row(c) /= w.class_counts(c);
    }
    return FittedModel(std::move(w), seed);
}

}  // namespace

FittedModel train(const LearnerConfig& cfg, const Matrix& features, std::span<const Label> labels,
                  int class_count, std::uint64_t seed) {
    cfg.validate();
    const auto n = features.rows();
    if (n < 1 || features.cols() < 1) throw ValidationError("cannot train on empty input");
    if (static_cast<std::size_t>(n) != labels.size()) {
        throw ValidationError(fmt::format("{} rows but {} labels", n, labels.size()));
    }
    if (class_count < 2) throw ValidationError("class_count must be >= 2");
    for (Label y : labels) {
        if (y < 0 || y >= class_count) throw ValidationError(fmt::format("label {} out of range", y));
    }

    ModelWeights w;
    w.kind = cfg.kind;
    w.class_count = class_count;
    w.feature_mean = features.colwise().mean().transpose();
    w.feature_scale = row_stddev_clamped(features, w.feature_mean);
    const Matrix z = (features.rowwise() - w.feature_mean.transpose()).array().rowwise() /
                     w.feature_scale.transpose().array();

    if (cfg.kind == LearnerKind::NearestCentroid) return train_centroids(z, labels, std::move(w), seed);

    const auto d = features.cols();
    if (cfg.pretrained) {
        const ModelWeights& p = *cfg.pretrained;
        if (p.lift_weights.rows() != d || p.head_weights.cols() != class_count) {
            throw ValidationError("pretrained weights do not match the data shape");
        }
        w.lift_weights = p.lift_weights;
        w.lift_bias = p.lift_bias;
        w.head_weights = p.head_weights;
        w.head_bias = p.head_bias;
    } else {
        Rng lift_rng(derive_seed(seed, 0, "lift"));
        std::normal_distribution<double> gauss(0.0, 1.0);
        w.lift_weights.resize(d, cfg.hidden_dim);
        for (Eigen::Index i = 0; i < w.lift_weights.size(); ++i) w.lift_weights.data()[i] = gauss(lift_rng);
        w.lift_bias.resize(cfg.hidden_dim);
        for (Eigen::Index i = 0; i < w.lift_bias.size(); ++i) w.lift_bias(i) = gauss(lift_rng);
        w.head_weights = Matrix::Zero(cfg.hidden_dim, class_count);
        w.head_bias = Vector::Zero(class_count);
    }

    const Matrix h = lift(z, w);
    const auto hidden = h.cols();
    Matrix vel_w = Matrix::Zero(hidden, class_count);
    Vector vel_b = Vector::Zero(class_count);

    Rng shuffle_rng(derive_seed(seed, 0, "shuffle"));
    IndexList order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), std::size_t{0});
    const auto batch = static_cast<std::size_t>(cfg.batch_size);
    Matrix hb;
    Labels yb;

    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        const double lr = cfg.cosine_decay
                              ? 0.5 * cfg.learning_rate *
                                    (1.0 + std::cos(std::numbers::pi * epoch / cfg.epochs))
                              : cfg.learning_rate;
        std::shuffle(order.begin(), order.end(), shuffle_rng);
        for (std::size_t start = 0; start < order.size(); start += batch) {
            const std::size_t len = std::min(batch, order.size() - start);
            hb.resize(static_cast<Eigen::Index>(len), hidden);
            yb.resize(len);
            for (std::size_t i = 0; i < len; ++i) {
                hb.row(static_cast<Eigen::Index>(i)) = h.row(static_cast<Eigen::Index>(order[start + i]));
                yb[i] = labels[order[start + i]];
            }
            const HeadLoss g = softmax_head_loss(hb, yb, w.head_weights, w.head_bias, cfg.weight_decay);
            vel_w = cfg.momentum * vel_w + g.grad_weights;
            vel_b = cfg.momentum * vel_b + g.grad_bias;
            w.head_weights -= lr * vel_w;
            w.head_bias -= lr * vel_b;
        }
    }
    return FittedModel(std::move(w), seed);
}

// ---------------------------------------------------------------------------
// Inference

EmbeddingMatrix embed(const FittedModel& model, const Matrix& x) {
    Matrix z = model.standardize(x);
    if (model.kind() == LearnerKind::NearestCentroid) return z;
    return lift(z, model.weights());
}

ProbMatrix predict_proba(const FittedModel& model, const Matrix& x) {
    return model.head_proba(embed(model, x));
}

ProbTensor mc_predict(const FittedModel& model, const Matrix& x, int repetitions,
                      double dropout_rate, std::uint64_t seed) {
    if (repetitions < 1) throw ValidationError("MC repetitions must be >= 1");
    if (!(dropout_rate >= 0.0 && dropout_rate < 1.0)) {
        throw ValidationError(fmt::format("dropout_rate {} outside [0,1)", dropout_rate));
    }
    const Matrix e = embed(model, x);
    ProbTensor out;
    out.samples.reserve(static_cast<std::size_t>(repetitions));
    if (dropout_rate == 0.0) {
        const Matrix p = model.head_proba(e);
        for (int t = 0; t < repetitions; ++t) out.samples.push_back(p);
        return out;
    }
    Rng rng(seed);
    std::bernoulli_distribution keep(1.0 - dropout_rate);
    const double scale = 1.0 / (1.0 - dropout_rate);
    Matrix masked(e.rows(), e.cols());
    for (int t = 0; t < repetitions; ++t) {
        for (Eigen::Index i = 0; i < e.size(); ++i) {
            masked.data()[i] = keep(rng) ? e.data()[i] * scale : 0.0;
        }
        out.samples.push_back(model.head_proba(masked));
    }
    return out;
}

Labels argmax_rows(const Matrix& probs) {
    Labels out(static_cast<std::size_t>(probs.rows()));
    for (Eigen::Index i = 0; i < probs.rows(); ++i) {
        Eigen::Index best = 0;
        for (Eigen::Index k = 1; k < probs.cols(); ++k) {
            if (probs(i, k) > probs(i, best)) best = k;
        }
        out[static_cast<std::size_t>(i)] = static_cast<Label>(best);
    }
    return out;
}

Labels predict_labels(const FittedModel& model, const Matrix& x) {
    return argmax_rows(predict_proba(model, x));
}

// ---------------------------------------------------------------------------
// ALQW1 serialization
//
//   ALQW1
//   kind <logistic|nearest-centroid>
//   classes <K>
//   <field> <rows> <cols> v v v ...      (one line per parameter, row-major)
//
// Fields, in order: feature_mean, feature_scale, lift_weights, lift_bias,
// head_weights, head_bias, centroids, class_counts. Vectors are written as
// rows x 1. Values use the shortest decimal form that round-trips exactly.

namespace {

template <typename M>
void write_field(std::ostream& out, const char* name, const M& m) {
    out << name << ' ' << m.rows() << ' ' << m.cols();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        for (Eigen::Index j = 0; j < m.cols(); ++j) out << ' ' << fmt::format("{}", m(i, j));
    }
    out << '\n';
}

Matrix read_field(std::istream& in, const char* name) {
    std::string tag;
    Eigen::Index rows = 0, cols = 0;
    if (!(in >> tag >> rows >> cols) || tag != name || rows < 0 || cols < 0) {
        throw ParseError(fmt::format("ALQW1: expected field '{}'", name));
    }
    Matrix m(rows, cols);
    for (Eigen::Index i = 0; i < m.size(); ++i) {
        std::string tok;
        if (!(in >> tok)) throw ParseError(fmt::format("ALQW1: truncated field '{}'", name));
        try {
            std::size_t used = 0;
            m.data()[i] = std::stod(tok, &used);
            if (used != tok.size()) throw std::invalid_argument(tok);
        } catch (const std::exception&) {
            throw ParseError(fmt::format("ALQW1: bad number '{}' in field '{}'", tok, name));
        }
    }
    return m;
}

Vector as_vector(const Matrix& m, const char* name) {
    if (m.cols() != 1 && m.size() != 0) throw ParseError(fmt::format("ALQW1: '{}' must be a column", name));
    return Eigen::Map<const Vector>(m.data(), m.size());
}

}  // namespace

void write_weights(std::ostream& out, const ModelWeights& w) {
    out << "ALQW1\n";
    out << "kind " << (w.kind == LearnerKind::MultinomialLogistic ? "logistic" : "nearest-centroid")
        << '\n';
    out << "classes " << w.class_count << '\n';
    write_field(out, "feature_mean", w.feature_mean);
    write_field(out, "feature_scale", w.feature_scale);
    write_field(out, "lift_weights", w.lift_weights);
    write_field(out, "lift_bias", w.lift_bias);
    write_field(out, "head_weights", w.head_weights);
    write_field(out, "head_bias", w.head_bias);
    write_field(out, "centroids", w.centroids);
    write_field(out, "class_counts", w.class_counts);
}

ModelWeights read_weights(std::istream& in) {
    std::string magic, key, kind;
    if (!(in >> magic) || magic != "ALQW1") throw ParseError("missing ALQW1 header");
    ModelWeights w;
    if (!(in >> key >> kind) || key != "kind") throw ParseError("ALQW1: expected 'kind'");
    if (kind == "logistic") {
        w.kind = LearnerKind::MultinomialLogistic;
    } else if (kind == "nearest-centroid") {
        w.kind = LearnerKind::NearestCentroid;
    } else {
        throw ParseError(fmt::format("ALQW1: unknown kind '{}'", kind));
    }
    if (!(in >> key >> w.class_count) || key != "classes") throw ParseError("ALQW1: expected 'classes'");
    w.feature_mean = as_vector(read_field(in, "feature_mean"), "feature_mean");
    w.feature_scale = as_vector(read_field(in, "feature_scale"), "feature_scale");
    w.lift_weights = read_field(in, "lift_weights");
    w.lift_bias = as_vector(read_field(in, "lift_bias"), "lift_bias");
    w.head_weights = read_field(in, "head_weights");
    w.head_bias = as_vector(read_field(in, "head_bias"), "head_bias");
    w.centroids = read_field(in, "centroids");
    w.class_counts = as_vector(read_field(in, "class_counts"), "class_counts");
    FittedModel check(w);  // shape validation
    return w;
}

void save_weights(const ModelWeights& w, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error(fmt::format("{}: cannot open for writing", path.string()));
    write_weights(out, w);
}

ModelWeights load_weights(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ParseError(fmt::format("{}: cannot open file", path.string()));
    return read_weights(in);
}

}  // namespace dalbench
