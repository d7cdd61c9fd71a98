#include "dalbench/clustering.hpp"

#include <algorithm>
#include <limits>
#include <numeric>

#include <fmt/format.h>

namespace dalbench {

std::vector<std::size_t> ClusterAssignment::sizes() const {
    std::vector<std::size_t> out(static_cast<std::size_t>(k), 0);
    for (int c : assignment) ++out[static_cast<std::size_t>(c)];
    return out;
}

// ---------------------------------------------------------------------------
// k-means++

IndexList kmeanspp_extend(const Matrix& x, IndexList chosen, std::size_t k, Rng& rng) {
    const auto n = static_cast<std::size_t>(x.rows());
    if (k > n) throw ValidationError(fmt::format("cannot seed {} centers from {} rows", k, n));
    if (chosen.empty() && k > 0) {
        std::uniform_int_distribution<std::size_t> first(0, n - 1);
        chosen.push_back(first(rng));
    }
    std::vector<char> taken(n, 0);
    for (std::size_t c : chosen) {
        if (c >= n || taken[c]) throw ValidationError("chosen centers must be distinct rows");
        taken[c] = 1;
    }
    std::vector<double> d2(n, std::numeric_limits<double>::infinity());
    auto absorb = [&](std::size_t center) {
        for (std::size_t i = 0; i < n; ++i) {
            const double d = (x.row(static_cast<Eigen::Index>(i)) -
                              x.row(static_cast<Eigen::Index>(center)))
                                 .squaredNorm();
            d2[i] = std::min(d2[i], d);
        }
        d2[center] = 0.0;
    };
    for (std::size_t c : chosen) absorb(c);

    while (chosen.size() < k) {
        double total = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            if (!taken[i]) total += d2[i];
        }
        std::size_t pick = n;
        if (total > 0.0) {
            std::uniform_real_distribution<double> u01(0.0, total);
            const double target = u01(rng);
            double cum = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                if (taken[i] || d2[i] <= 0.0) continue;
                cum += d2[i];
                pick = i;
                if (cum > target) break;
            }
        } else {
            std::uniform_int_distribution<std::size_t> which(0, n - chosen.size() - 1);
            std::size_t r = which(rng);
            for (std::size_t i = 0; i < n; ++i) {
                if (taken[i]) continue;
                if (r-- == 0) {
                    pick = i;
                    break;
                }
            }
        }
        chosen.push_back(pick);
        taken[pick] = 1;
        absorb(pick);
    }
    return chosen;
}

IndexList kmeanspp_seed(const Matrix& x, std::size_t k, std::uint64_t seed) {
    Rng rng(seed);
    return kmeanspp_extend(x, {}, k, rng);
}

// ---------------------------------------------------------------------------
// Lloyd iterations

KMeansResult kmeans_cluster(const Matrix& x, std::size_t k, std::uint64_t seed, int max_iterations,
                            double tolerance) {
    const auto n = static_cast<std::size_t>(x.rows());
    if (k < 1 || k > n) throw ValidationError(fmt::format("k={} invalid for {} rows", k, n));
    const auto kk = static_cast<Eigen::Index>(k);

    Matrix centroids(kk, x.cols());
    const IndexList init = kmeanspp_seed(x, k, seed);
    for (std::size_t c = 0; c < k; ++c) {
        centroids.row(static_cast<Eigen::Index>(c)) = x.row(static_cast<Eigen::Index>(init[c]));
    }

    std::vector<int> assign(n, 0);
    std::vector<double> dist(n, 0.0);
    std::vector<std::size_t> counts(k, 0);
    int iter = 0;
    while (iter < max_iterations) {
        ++iter;
        std::fill(counts.begin(), counts.end(), 0);
        for (std::size_t i = 0; i < n; ++i) {
            const auto row = x.row(static_cast<Eigen::Index>(i));
            Eigen::Index best = 0;
            double best_d = (row - centroids.row(0)).squaredNorm();
            for (Eigen::Index c = 1; c < kk; ++c) {
                const double d = (row - centroids.row(c)).squaredNorm();
                if (d < best_d) {
                    best_d = d;
                    best = c;
                }
            }
            assign[i] = static_cast<int>(best);
            dist[i] = best_d;
            ++counts[static_cast<std::size_t>(best)];
        }
        for (std::size_t c = 0; c < k; ++c) {
            if (counts[c] != 0) continue;
            std::size_t far = n;
            for (std::size_t i = 0; i < n; ++i) {
                if (counts[static_cast<std::size_t>(assign[i])] < 2) continue;
                if (far == n || dist[i] > dist[far]) far = i;
            }
            --counts[static_cast<std::size_t>(assign[far])];
            assign[far] = static_cast<int>(c);
            counts[c] = 1;
            dist[far] = 0.0;
        }

        Matrix updated = Matrix::Zero(kk, x.cols());
        for (std::size_t i = 0; i < n; ++i) updated.row(assign[i]) += x.row(static_cast<Eigen::Index>(i));
        for (std::size_t c = 0; c < k; ++c) {
            updated.row(static_cast<Eigen::Index>(c)) /= static_cast<double>(counts[c]);
        }
        double moved = 0.0;
        for (Eigen::Index c = 0; c < kk; ++c) {
            moved = std::max(moved, (updated.row(c) - centroids.row(c)).norm());
        }
        centroids = std::move(updated);
        if (moved < tolerance) break;
    }
    return {ClusterAssignment{std::move(assign), static_cast<int>(k)}, std::move(centroids), iter};
}

// ---------------------------------------------------------------------------
// Average-linkage agglomeration with a nearest-neighbor cache.
//
// nn[i] holds the closest active cluster j > i (ties to the smaller j), so the
// global minimum over i (ties to the smaller i) is the lexicographically
// smallest closest pair.

ClusterAssignment agglomerative_cluster(const Matrix& x, std::size_t k) {
    const auto n = static_cast<std::size_t>(x.rows());
    if (k < 1 || k > n) throw ValidationError(fmt::format("k={} invalid for {} rows", k, n));

    constexpr double inf = std::numeric_limits<double>::infinity();
    std::vector<double> d(n * n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            const double v =
                (x.row(static_cast<Eigen::Index>(i)) - x.row(static_cast<Eigen::Index>(j))).norm();
            d[i * n + j] = v;
            d[j * n + i] = v;
        }
    }
    std::vector<char> active(n, 1);
    std::vector<std::size_t> size(n, 1);
    std::vector<IndexList> members(n);
    for (std::size_t i = 0; i < n; ++i) members[i] = {i};
    std::vector<std::size_t> nn(n, n);
    std::vector<double> nnd(n, inf);

    auto refresh = [&](std::size_t i) {
        nn[i] = n;
        nnd[i] = inf;
        for (std::size_t j = i + 1; j < n; ++j) {
            if (active[j] && d[i * n + j] < nnd[i]) {
                nnd[i] = d[i * n + j];
                nn[i] = j;
            }
        }
    };
    for (std::size_t i = 0; i < n; ++i) refresh(i);

    for (std::size_t clusters = n; clusters > k; --clusters) {
        std::size_t a = n;
        for (std::size_t i = 0; i < n; ++i) {
            if (active[i] && nn[i] < n && (a == n || nnd[i] < nnd[a])) a = i;
        }
        const std::size_t b = nn[a];

        const double wa = static_cast<double>(size[a]);
        const double wb = static_cast<double>(size[b]);
        for (std::size_t i = 0; i < n; ++i) {
            if (!active[i] || i == a || i == b) continue;
            const double v = (wa * d[a * n + i] + wb * d[b * n + i]) / (wa + wb);
            d[a * n + i] = v;
            d[i * n + a] = v;
        }
        active[b] = 0;
        size[a] += size[b];
        members[a].insert(members[a].end(), members[b].begin(), members[b].end());
        members[b].clear();

        refresh(a);
        for (std::size_t i = 0; i < b; ++i) {
            if (!active[i] || i == a) continue;
            if (nn[i] == a || nn[i] == b) {
                refresh(i);
            } else if (i < a) {
                const double v = d[i * n + a];
                if (v < nnd[i] || (v == nnd[i] && a < nn[i])) {
                    nnd[i] = v;
                    nn[i] = a;
                }
            }
        }
    }

    ClusterAssignment out{std::vector<int>(n, -1), static_cast<int>(k)};
    int next = 0;
    for (std::size_t slot = 0; slot < n; ++slot) {
        if (!active[slot]) continue;
        for (std::size_t row : members[slot]) out.assignment[row] = next;
        ++next;
    }
    return out;
}

}  // namespace dalbench
