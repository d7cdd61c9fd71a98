#include "dalbench/pooldata.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include <fmt/format.h>

#include "dalbench/rng.hpp"

namespace dalbench {

// ---------------------------------------------------------------------------
// Dataset

Dataset::Dataset(Matrix features, Labels labels, int class_count, std::string name)
    : features_(std::move(features)),
      labels_(std::move(labels)),
      class_count_(class_count),
      name_(std::move(name)) {
    if (class_count_ < 2) {
        throw ValidationError(fmt::format("class_count must be >= 2, got {}", class_count_));
    }
    if (features_.rows() < 1 || features_.cols() < 1) {
        throw ValidationError("dataset needs at least one sample and one feature");
    }
    if (static_cast<std::size_t>(features_.rows()) != labels_.size()) {
        throw ValidationError(fmt::format("{} feature rows but {} labels", features_.rows(),
                                          labels_.size()));
    }
    if (!features_.allFinite()) {
        throw ValidationError("features contain non-finite values");
    }
    for (std::size_t i = 0; i < labels_.size(); ++i) {
        if (labels_[i] < 0 || labels_[i] >= class_count_) {
            throw ValidationError(
                fmt::format("label {} at row {} outside [0,{})", labels_[i], i, class_count_));
        }
    }
}

std::vector<std::size_t> Dataset::class_counts() const {
    std::vector<std::size_t> counts(static_cast<std::size_t>(class_count_), 0);
    for (Label y : labels_) ++counts[static_cast<std::size_t>(y)];
    return counts;
}

Dataset Dataset::subset(std::span<const std::size_t> rows, std::string name) const {
    Matrix x(static_cast<Eigen::Index>(rows.size()), features_.cols());
    Labels y(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        if (rows[i] >= size()) throw std::out_of_range("subset row out of range");
        x.row(static_cast<Eigen::Index>(i)) = features_.row(static_cast<Eigen::Index>(rows[i]));
        y[i] = labels_[rows[i]];
    }
    return Dataset(std::move(x), std::move(y), class_count_, name.empty() ? name_ : std::move(name));
}

Dataset Dataset::with_labels(Labels labels) const {
    return Dataset(features_, std::move(labels), class_count_, name_);
}

// ---------------------------------------------------------------------------
// Generators

void MixtureSpec::validate() const {
    if (class_count < 2) throw ValidationError("mixture needs at least two classes");
    if (dims < 1) throw ValidationError("mixture needs dims >= 1");
    if (per_class_counts.size() != static_cast<std::size_t>(class_count)) {
        throw ValidationError(fmt::format("per_class_counts has {} entries, expected {}",
                                          per_class_counts.size(), class_count));
    }
    for (std::size_t c : per_class_counts) {
        if (c < 1) throw ValidationError("every class needs at least one sample");
    }
    if (class_means.rows() != class_count || class_means.cols() != dims) {
        throw ValidationError(fmt::format("class_means is {}x{}, expected {}x{}",
                                          class_means.rows(), class_means.cols(), class_count,
                                          dims));
    }
    if (!class_means.allFinite()) throw ValidationError("class_means must be finite");
    if (!(class_stddev > 0.0) || !std::isfinite(class_stddev)) {
        throw ValidationError("class_stddev must be positive");
    }
}

Matrix grid_means(int class_count, int dims, double spacing) {
    if (class_count < 1 || dims < 1) throw ValidationError("grid needs positive sizes");
    int side = 1;
    while (std::pow(side, dims) < class_count) ++side;
    Matrix means = Matrix::Zero(class_count, dims);
    for (int k = 0; k < class_count; ++k) {
        int rest = k;
        for (int j = dims - 1; j >= 0; --j) {
            means(k, j) = spacing * (rest % side);
            rest /= side;
        }
    }
    return means;
}

Dataset generate_mixture(const MixtureSpec& spec) {
    spec.validate();
    const std::size_t n =
        std::accumulate(spec.per_class_counts.begin(), spec.per_class_counts.end(), std::size_t{0});
    Matrix x(static_cast<Eigen::Index>(n), spec.dims);
    Labels y(n);
    Rng rng(spec.seed);
    std::normal_distribution<double> noise(0.0, spec.class_stddev);
    std::size_t row = 0;
    for (int k = 0; k < spec.class_count; ++k) {
        for (std::size_t i = 0; i < spec.per_class_counts[static_cast<std::size_t>(k)]; ++i) {
            for (int j = 0; j < spec.dims; ++j) {
                x(static_cast<Eigen::Index>(row), j) = spec.class_means(k, j) + noise(rng);
            }
            y[row++] = k;
        }
    }
    return Dataset(std::move(x), std::move(y), spec.class_count, "mixture");
}

Dataset inject_label_noise(const Dataset& ds, double rate, std::uint64_t seed) {
    if (!(rate >= 0.0 && rate <= 1.0)) {
        throw ValidationError(fmt::format("noise rate {} outside [0,1]", rate));
    }
    const auto flips = static_cast<std::size_t>(std::llround(rate * static_cast<double>(ds.size())));
    if (flips == 0) return ds;
    const int k = ds.class_count();
    if (k < 2) throw ValidationError("label noise needs at least two classes");

    Rng rng(seed);
    IndexList order(ds.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    // Partial Fisher-Yates: the first `flips` entries are a uniform sample.
    for (std::size_t i = 0; i < flips; ++i) {
        std::uniform_int_distribution<std::size_t> pick(i, order.size() - 1);
        std::swap(order[i], order[pick(rng)]);
    }
    Labels labels = ds.labels();
    std::uniform_int_distribution<int> offset(1, k - 1);
    for (std::size_t i = 0; i < flips; ++i) {
        Label& y = labels[order[i]];
        y = (y + offset(rng)) % k;
    }
    return ds.with_labels(std::move(labels));
}

// ---------------------------------------------------------------------------
// Tabular files

namespace {

std::string_view trim(std::string_view s) {
    const auto ws = " \t\r\n";
    const auto b = s.find_first_not_of(ws);
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(ws);
    return s.substr(b, e - b + 1);
}

bool parse_double(std::string_view tok, double& out) {
    tok = trim(tok);
    if (tok.empty()) return false;
    if (tok.front() == '+') tok.remove_prefix(1);
    auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), out);
    return ec == std::errc{} && ptr == tok.data() + tok.size();
}

bool parse_int(std::string_view tok, long long& out) {
    tok = trim(tok);
    if (tok.empty()) return false;
    auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), out);
    return ec == std::errc{} && ptr == tok.data() + tok.size();
}

}  // namespace

Dataset load_table(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ParseError(fmt::format("{}: cannot open file", path.string()));

    auto fail = [&](std::size_t line, const std::string& what) {
        return ParseError(fmt::format("{}:{}: {}", path.string(), line, what));
    };

    std::string line;
    std::size_t lineno = 0;
    long long classes = -1;
    while (std::getline(in, line)) {
        ++lineno;
        auto t = trim(line);
        if (t.empty()) continue;
        constexpr std::string_view prefix = "# classes=";
        if (t.substr(0, prefix.size()) != prefix || !parse_int(t.substr(prefix.size()), classes)) {
            throw fail(lineno, "expected header '# classes=<K>'");
        }
        break;
    }
    if (classes < 0) throw fail(lineno, "missing '# classes=<K>' header");
    if (classes < 2) throw fail(lineno, fmt::format("class count {} must be >= 2", classes));

    std::vector<double> values;
    Labels labels;
    std::size_t columns = 0;
    while (std::getline(in, line)) {
        ++lineno;
        auto t = trim(line);
        if (t.empty()) continue;
        std::vector<std::string_view> tokens;
        std::size_t start = 0;
        while (true) {
            auto comma = t.find(',', start);
            tokens.push_back(t.substr(start, comma == std::string_view::npos ? comma : comma - start));
            if (comma == std::string_view::npos) break;
            start = comma + 1;
        }
        if (tokens.size() < 2) throw fail(lineno, "need at least one feature and a label");
        if (columns == 0) columns = tokens.size();
        if (tokens.size() != columns) {
            throw fail(lineno, fmt::format("expected {} columns, found {}", columns, tokens.size()));
        }
        for (std::size_t j = 0; j + 1 < tokens.size(); ++j) {
            double v = 0.0;
            if (!parse_double(tokens[j], v)) {
                throw fail(lineno, fmt::format("column {}: '{}' is not a number", j + 1,
                                               std::string(trim(tokens[j]))));
            }
            if (!std::isfinite(v)) throw fail(lineno, fmt::format("column {}: non-finite value", j + 1));
            values.push_back(v);
        }
        long long y = 0;
        if (!parse_int(tokens.back(), y)) {
            throw fail(lineno, fmt::format("label '{}' is not an integer",
                                           std::string(trim(tokens.back()))));
        }
        if (y < 0 || y >= classes) {
            throw fail(lineno, fmt::format("label {} outside [0,{})", y, classes));
        }
        labels.push_back(static_cast<Label>(y));
    }
    if (labels.empty()) throw fail(lineno, "no samples");

    const auto n = static_cast<Eigen::Index>(labels.size());
    const auto d = static_cast<Eigen::Index>(columns - 1);
    Matrix x = Eigen::Map<const Matrix>(values.data(), n, d);
    return Dataset(std::move(x), std::move(labels), static_cast<int>(classes),
                   path.stem().string());
}

void save_table(const Dataset& ds, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error(fmt::format("{}: cannot open for writing", path.string()));
    out << "# classes=" << ds.class_count() << '\n';
    const Matrix& x = ds.features();
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
        std::string row;
        for (Eigen::Index j = 0; j < x.cols(); ++j) {
            row += fmt::format("{}", x(i, j));  // shortest round-trip repr
            row += ',';
        }
        row += std::to_string(ds.labels()[static_cast<std::size_t>(i)]);
        out << row << '\n';
    }
    if (!out) throw std::runtime_error(fmt::format("{}: write failed", path.string()));
}

// ---------------------------------------------------------------------------
// Splitting

SplitResult split(const Dataset& ds, double train_fraction, std::uint64_t seed) {
    if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
        throw ValidationError(fmt::format("train_fraction {} outside (0,1)", train_fraction));
    }
    const auto k = static_cast<std::size_t>(ds.class_count());
    std::vector<IndexList> by_class(k);
    for (std::size_t i = 0; i < ds.size(); ++i) {
        by_class[static_cast<std::size_t>(ds.labels()[i])].push_back(i);
    }
    Rng rng(seed);
    IndexList train, test;
    for (std::size_t c = 0; c < k; ++c) {
        auto& members = by_class[c];
        if (members.empty()) continue;
        if (members.size() < 2) {
            throw ValidationError(fmt::format("class {} has a single sample; cannot stratify", c));
        }
        std::shuffle(members.begin(), members.end(), rng);
        const auto take = static_cast<std::size_t>(
            std::llround(train_fraction * static_cast<double>(members.size())));
        train.insert(train.end(), members.begin(), members.begin() + static_cast<std::ptrdiff_t>(take));
        test.insert(test.end(), members.begin() + static_cast<std::ptrdiff_t>(take), members.end());
    }
    if (train.empty() || test.empty()) {
        throw ValidationError("split leaves one side empty");
    }
    std::sort(train.begin(), train.end());
    std::sort(test.begin(), test.end());
    return {ds.subset(train, ds.name() + "-train"), ds.subset(test, ds.name() + "-test")};
}

// ---------------------------------------------------------------------------
// Pool bookkeeping

PoolState::PoolState(IndexList labeled, IndexList unlabeled, std::size_t dataset_size)
    : labeled_(std::move(labeled)), unlabeled_(std::move(unlabeled)), dataset_size_(dataset_size) {
    if (labeled_.size() + unlabeled_.size() != dataset_size_) {
        throw ContractViolation("pool partitions do not cover the dataset");
    }
    std::vector<char> seen(dataset_size_, 0);
    for (const IndexList* part : {&labeled_, &unlabeled_}) {
        for (std::size_t i : *part) {
            if (i >= dataset_size_ || seen[i]) {
                throw ContractViolation(fmt::format("index {} repeated or out of range", i));
            }
            seen[i] = 1;
        }
    }
}

PoolState init_pool(std::size_t dataset_size) {
    IndexList all(dataset_size);
    std::iota(all.begin(), all.end(), std::size_t{0});
    return PoolState({}, std::move(all), dataset_size);
}

PoolState init_pool(const Dataset& ds) { return init_pool(ds.size()); }

PoolState commit_query(const PoolState& pool, const QueryBatch& batch) {
    // 0 = labeled, 1 = unlabeled, 2 = queried in this batch
    std::vector<char> state(pool.dataset_size(), 0);
    for (std::size_t i : pool.unlabeled()) state[i] = 1;
    for (std::size_t i : batch.indices) {
        if (i >= state.size() || state[i] == 0) {
            throw ContractViolation(fmt::format("index {} is not unlabeled", i));
        }
        if (state[i] == 2) throw ContractViolation(fmt::format("index {} queried twice", i));
        state[i] = 2;
    }
    IndexList labeled = pool.labeled();
    labeled.insert(labeled.end(), batch.indices.begin(), batch.indices.end());
    IndexList unlabeled;
    unlabeled.reserve(pool.unlabeled().size() - batch.size());
    for (std::size_t i : pool.unlabeled()) {
        if (state[i] == 1) unlabeled.push_back(i);
    }
    return PoolState(std::move(labeled), std::move(unlabeled), pool.dataset_size());
}

}  // namespace dalbench
