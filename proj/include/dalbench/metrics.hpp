#pragma once

#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "dalbench/pooldata.hpp"

namespace dalbench {

enum class MetricKind { Accuracy, F1Binary };

std::string_view to_string(MetricKind kind) noexcept;
MetricKind parse_metric(std::string_view text);

/// Maps every class to 0 (normal) or 1 (anomaly).
class CollapseMap {
public:
    explicit CollapseMap(std::vector<int> mapping);

    /// Identity map for a two-class problem.
    static CollapseMap identity_binary() { return CollapseMap({0, 1}); }

    int operator()(Label y) const;
    std::size_t class_count() const noexcept { return mapping_.size(); }
    const std::vector<int>& mapping() const noexcept { return mapping_; }

private:
    std::vector<int> mapping_;
};

double accuracy(std::span<const Label> pred, std::span<const Label> truth);

/// Binary F1 with collapsed class 1 as positive; 0 when 2TP+FP+FN = 0.
double f1_binary(std::span<const Label> pred, std::span<const Label> truth, const CollapseMap& collapse);

/// Labeled samples per class.
std::vector<std::size_t> class_histogram(const PoolState& pool, std::span<const Label> labels, int class_count);

struct CurvePoint {
    double labeled_count = 0.0;
    double value = 0.0;
};

/// Metric against labeled-sample count; counts strictly increasing.
struct Curve {
    std::string name;
    std::vector<CurvePoint> points;
};

/// Area under the budget curve by trapezoids, normalized by the count range.
double aubc(const Curve& curve);

}  // namespace dalbench
