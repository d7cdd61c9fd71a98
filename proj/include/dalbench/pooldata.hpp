#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace dalbench {

using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;
using Label = int;
using Labels = std::vector<Label>;
using IndexList = std::vector<std::size_t>;

/// Raised when a value object is constructed from inconsistent inputs.
class ValidationError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Raised by load_table; the message carries the offending line number.
class ParseError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Raised when a pool update breaks the labeled/unlabeled partition.
class ContractViolation : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

/**
 * Feature matrix plus integer labels in [0, class_count).
 *
 * Construction validates every invariant, so a Dataset in hand is always
 * well-formed: at least one row and one column, finite features, and labels
 * within range.
 */
class Dataset {
public:
    Dataset(Matrix features, Labels labels, int class_count, std::string name = {});

    const Matrix& features() const noexcept { return features_; }
    const Labels& labels() const noexcept { return labels_; }
    int class_count() const noexcept { return class_count_; }
    const std::string& name() const noexcept { return name_; }

    std::size_t size() const noexcept { return labels_.size(); }
    std::size_t dims() const noexcept { return static_cast<std::size_t>(features_.cols()); }

    /// Per-class sample counts, length class_count.
    std::vector<std::size_t> class_counts() const;

    /// Rows picked in the given order.
    Dataset subset(std::span<const std::size_t> rows, std::string name = {}) const;

    /// Same features, new labels (validated against class_count).
    Dataset with_labels(Labels labels) const;

private:
    Matrix features_;
    Labels labels_;
    int class_count_;
    std::string name_;
};

/// Isotropic Gaussian mixture description, one component per class.
struct MixtureSpec {
    int class_count = 2;
    int dims = 2;
    std::vector<std::size_t> per_class_counts;
    Matrix class_means;  // class_count x dims
    double class_stddev = 1.0;
    std::uint64_t seed = 0;

    void validate() const;
};

/// Means placed on an axis-aligned grid with the given spacing; the grid is
/// ceil(K^(1/dims)) wide per axis and filled in row-major order.
Matrix grid_means(int class_count, int dims, double spacing);

Dataset generate_mixture(const MixtureSpec& spec);

/// Flips exactly round(rate * n) labels, each to a uniformly drawn different class.
Dataset inject_label_noise(const Dataset& ds, double rate, std::uint64_t seed);

/// Reads the `# classes=<K>` tabular format. Errors name the line number.
Dataset load_table(const std::filesystem::path& path);

/// Writes the tabular format read by load_table; round-trips exactly.
void save_table(const Dataset& ds, const std::filesystem::path& path);

struct SplitResult {
    Dataset train;
    Dataset test;
};

/// Stratified split: per class, round(train_fraction * count) go to train.
SplitResult split(const Dataset& ds, double train_fraction, std::uint64_t seed);

/// Labeled and unlabeled index partitions over a dataset of fixed size.
class PoolState {
public:
    PoolState(IndexList labeled, IndexList unlabeled, std::size_t dataset_size);

    const IndexList& labeled() const noexcept { return labeled_; }
    const IndexList& unlabeled() const noexcept { return unlabeled_; }
    std::size_t dataset_size() const noexcept { return dataset_size_; }

private:
    IndexList labeled_;
    IndexList unlabeled_;
    std::size_t dataset_size_;
};

/// Indices queried in one cycle, in selection order.
struct QueryBatch {
    IndexList indices;
    int cycle = 0;

    std::size_t size() const noexcept { return indices.size(); }
    bool operator==(const QueryBatch&) const = default;
};

PoolState init_pool(const Dataset& ds);
PoolState init_pool(std::size_t dataset_size);

/// L' = L followed by the batch, U' = U minus the batch (order kept).
PoolState commit_query(const PoolState& pool, const QueryBatch& batch);

}  // namespace dalbench
