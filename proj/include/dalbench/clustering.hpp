#pragma once

#include <cstdint>
#include <vector>

#include "dalbench/pooldata.hpp"
#include "dalbench/rng.hpp"

namespace dalbench {

/// Cluster id per row, ids in [0, k).
struct ClusterAssignment {
    std::vector<int> assignment;
    int k = 0;

    std::vector<std::size_t> sizes() const;
};

struct KMeansResult {
    ClusterAssignment clusters;
    Matrix centroids;  // k x d
    int iterations = 0;
};

/// k-means++ seeding: first center uniform, later ones with probability
/// proportional to the squared distance to the nearest chosen center.
/// Falls back to a uniform draw over unchosen rows when every D^2 is zero.
IndexList kmeanspp_seed(const Matrix& x, std::size_t k, std::uint64_t seed);

/// Continues a k-means++ seeding from already chosen rows until k are chosen.
IndexList kmeanspp_extend(const Matrix& x, IndexList chosen, std::size_t k, Rng& rng);

/// k-means++ initialization followed by Lloyd iterations, stopping when no
/// centroid moves more than `tolerance` or after `max_iterations`. A cluster
/// that empties is reseeded with the point farthest from its own centroid,
/// so every returned cluster has at least one member.
KMeansResult kmeans_cluster(const Matrix& x, std::size_t k, std::uint64_t seed,
                            int max_iterations = 100, double tolerance = 1e-6);

/// Average-linkage agglomerative clustering under Euclidean distance, merged
/// until k clusters remain. Equal distances merge the lexicographically
/// smallest pair first. Cluster ids are numbered by each cluster's smallest
/// member row.
ClusterAssignment agglomerative_cluster(const Matrix& x, std::size_t k);

}  // namespace dalbench
