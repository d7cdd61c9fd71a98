#include "dalbench/metrics.hpp"

#include <fmt/format.h>

namespace dalbench {

std::string_view to_string(MetricKind kind) noexcept {
    return kind == MetricKind::Accuracy ? "accuracy" : "f1-binary";
}

MetricKind parse_metric(std::string_view text) {
    if (text == "accuracy") return MetricKind::Accuracy;
    if (text == "f1-binary" || text == "f1") return MetricKind::F1Binary;
    throw ValidationError(fmt::format("unknown metric '{}'", text));
}

CollapseMap::CollapseMap(std::vector<int> mapping) : mapping_(std::move(mapping)) {
    bool normal = false, anomaly = false;
    for (int v : mapping_) {
        if (v != 0 && v != 1) throw ValidationError("collapse map targets must be 0 or 1");
        normal |= v == 0;
        anomaly |= v == 1;
    }
    if (!normal || !anomaly) throw ValidationError("collapse map needs classes on both sides");
}

int CollapseMap::operator()(Label y) const {
    if (y < 0 || static_cast<std::size_t>(y) >= mapping_.size()) {
        throw ValidationError(fmt::format("class {} has no collapse mapping", y));
    }
    return mapping_[static_cast<std::size_t>(y)];
}

double accuracy(std::span<const Label> pred, std::span<const Label> truth) {
    if (pred.size() != truth.size()) throw ValidationError("prediction and truth lengths differ");
    if (pred.empty()) throw ValidationError("accuracy of an empty set");
    std::size_t hits = 0;
    for (std::size_t i = 0; i < pred.size(); ++i) hits += pred[i] == truth[i];
    return static_cast<double>(hits) / static_cast<double>(pred.size());
}

double f1_binary(std::span<const Label> pred, std::span<const Label> truth, const CollapseMap& collapse) {
    if (pred.size() != truth.size()) throw ValidationError("prediction and truth lengths differ");
    std::size_t tp = 0, fp = 0, fn = 0;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        const int p = collapse(pred[i]);
        const int t = collapse(truth[i]);
        tp += p == 1 && t == 1;
        fp += p == 1 && t == 0;
        fn += p == 0 && t == 1;
    }
    const std::size_t denom = 2 * tp + fp + fn;
    return denom == 0 ? 0.0 : 2.0 * static_cast<double>(tp) / static_cast<double>(denom);
}

std::vector<std::size_t> class_histogram(const PoolState& pool, std::span<const Label> labels,
                                         int class_count) {
    if (labels.size() != pool.dataset_size()) throw ValidationError("labels do not match the pool");
    std::vector<std::size_t> counts(static_cast<std::size_t>(class_count), 0);
    for (std::size_t i : pool.labeled()) {
        const Label y = labels[i];
        if (y < 0 || y >= class_count) throw ValidationError(fmt::format("label {} out of range", y));
        ++counts[static_cast<std::size_t>(y)];
    }
    return counts;
}

double aubc(const Curve& curve) {
    const auto& pts = curve.points;
    if (pts.size() < 2) throw ValidationError("AUBC needs at least two points");
    double area = 0.0;
    for (std::size_t i = 1; i < pts.size(); ++i) {
        const double dx = pts[i].labeled_count - pts[i - 1].labeled_count;
        if (!(dx > 0.0)) throw ValidationError("curve counts must be strictly increasing");
        area += 0.5 * dx * (pts[i].value + pts[i - 1].value);
    }
    return area / (pts.back().labeled_count - pts.front().labeled_count);
}

}  // namespace dalbench
