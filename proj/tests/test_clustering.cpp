#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <set>

#include "dalbench/clustering.hpp"

using namespace dalbench;

namespace {

Matrix column(std::initializer_list<double> v) {
    Matrix m(static_cast<Eigen::Index>(v.size()), 1);
    Eigen::Index i = 0;
    for (double x : v) m(i++, 0) = x;
    return m;
}

Matrix random_points(std::mt19937_64& rng, std::size_t n, int d) {
    std::uniform_real_distribution<double> u(-5.0, 5.0);
    Matrix x(static_cast<Eigen::Index>(n), d);
    for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = u(rng);
    return x;
}

// Partition as a set of member sets, independent of id numbering.
std::set<std::set<std::size_t>> partition(const ClusterAssignment& a) {
    std::vector<std::set<std::size_t>> groups(static_cast<std::size_t>(a.k));
    for (std::size_t i = 0; i < a.assignment.size(); ++i) groups[static_cast<std::size_t>(a.assignment[i])].insert(i);
    return {groups.begin(), groups.end()};
}

// Textbook O(n^3) average linkage: recompute every pairwise cluster distance
// as the mean of member distances, merge the smallest (lexicographic ties).
std::set<std::set<std::size_t>> brute_average_linkage(const Matrix& x, std::size_t k) {
    std::vector<std::vector<std::size_t>> clusters;
    for (std::size_t i = 0; i < static_cast<std::size_t>(x.rows()); ++i) clusters.push_back({i});
    auto dist = [&](std::size_t a, std::size_t b) {
        double s = 0.0;
        for (Eigen::Index j = 0; j < x.cols(); ++j) {
            const double t = x(static_cast<Eigen::Index>(a), j) - x(static_cast<Eigen::Index>(b), j);
            s += t * t;
        }
        return std::sqrt(s);
    };
    while (clusters.size() > k) {
        double best = std::numeric_limits<double>::infinity();
        std::size_t ba = 0, bb = 0;
        for (std::size_t a = 0; a < clusters.size(); ++a) {
            for (std::size_t b = a + 1; b < clusters.size(); ++b) {
                double s = 0.0;
                for (auto i : clusters[a]) {
                    for (auto j : clusters[b]) s += dist(i, j);
                }
                s /= static_cast<double>(clusters[a].size() * clusters[b].size());
                if (s < best) {
                    best = s;
                    ba = a;
                    bb = b;
                }
            }
        }
        clusters[ba].insert(clusters[ba].end(), clusters[bb].begin(), clusters[bb].end());
        clusters.erase(clusters.begin() + static_cast<std::ptrdiff_t>(bb));
    }
    std::set<std::set<std::size_t>> out;
    for (const auto& c : clusters) out.insert({c.begin(), c.end()});
    return out;
}

}  // namespace

TEST(KMeansPP, SingleCenter) {
    const IndexList c = kmeanspp_seed(column({3, 1, 4, 1, 5}), 1, 7);
    ASSERT_EQ(c.size(), 1u);
    EXPECT_LT(c[0], 5u);
}

TEST(KMeansPP, IdenticalPointsFallBackToUniform) {
    const Matrix x = Matrix::Constant(6, 2, 1.5);
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const IndexList c = kmeanspp_seed(x, 2, seed);
        ASSERT_EQ(c.size(), 2u);
        EXPECT_NE(c[0], c[1]);
    }
    const IndexList all = kmeanspp_seed(x, 6, 3);
    EXPECT_EQ(std::set<std::size_t>(all.begin(), all.end()).size(), 6u);
}

TEST(KMeansPP, TooManyCenters) { EXPECT_THROW(kmeanspp_seed(column({1, 2}), 3, 0), ValidationError); }

TEST(KMeansPP, SquaredDistanceWeighting) {
    // Points {0,1,4} with the first center at 0: D^2 weights 1 and 16.
    const Matrix x = column({0.0, 1.0, 4.0});
    int far = 0;
    const int draws = 20000;
    for (int s = 0; s < draws; ++s) {
        Rng rng(static_cast<std::uint64_t>(s));
        far += kmeanspp_extend(x, {0}, 2, rng)[1] == 2;
    }
    EXPECT_NEAR(static_cast<double>(far) / draws, 16.0 / 17.0, 0.01);
}

TEST(KMeans, KEqualsNGivesSingletons) {
    const Matrix x = column({4.0, -1.0, 2.5, 9.0});
    const KMeansResult r = kmeans_cluster(x, 4, 2);
    EXPECT_EQ(std::set<int>(r.clusters.assignment.begin(), r.clusters.assignment.end()).size(), 4u);
    for (std::size_t i = 0; i < 4; ++i) {
        EXPECT_EQ(r.centroids(r.clusters.assignment[i], 0), x(static_cast<Eigen::Index>(i), 0));
    }
}

TEST(KMeans, SeparatedGroups) {
    const Matrix x = column({0.0, 0.1, 10.0, 10.1});
    const KMeansResult r = kmeans_cluster(x, 2, 5);
    std::vector<double> c{r.centroids(0, 0), r.centroids(1, 0)};
    std::sort(c.begin(), c.end());
    EXPECT_NEAR(c[0], 0.05, 1e-12);
    EXPECT_NEAR(c[1], 10.05, 1e-12);
    EXPECT_EQ(r.clusters.assignment[0], r.clusters.assignment[1]);
    EXPECT_EQ(r.clusters.assignment[2], r.clusters.assignment[3]);
}

TEST(KMeans, DeterministicPerSeed) {
    std::mt19937_64 rng(4);
    const Matrix x = random_points(rng, 60, 3);
    EXPECT_EQ(kmeans_cluster(x, 7, 9).clusters.assignment, kmeans_cluster(x, 7, 9).clusters.assignment);
    EXPECT_THROW(kmeans_cluster(x, 61, 0), ValidationError);
}

TEST(KMeans, NeverReturnsEmptyClusters) {
    std::mt19937_64 rng(12);
    for (int trial = 0; trial < 100; ++trial) {
        const std::size_t n = 1 + rng() % 25;
        Matrix x = random_points(rng, n, 1 + static_cast<int>(rng() % 3));
        // Duplicate rows make empty clusters likely.
        for (Eigen::Index i = 1; i < x.rows(); i += 2) x.row(i) = x.row(i - 1);
        const std::size_t k = 1 + rng() % n;
        const KMeansResult r = kmeans_cluster(x, k, rng());
        const auto sizes = r.clusters.sizes();
        ASSERT_EQ(sizes.size(), k);
        for (auto s : sizes) EXPECT_GE(s, 1u);
        for (int c : r.clusters.assignment) EXPECT_LT(c, static_cast<int>(k));
    }
}

TEST(Agglomerative, SingletonsAndSingleCluster) {
    const Matrix x = column({0.0, 1.0, 10.0});
    EXPECT_EQ(agglomerative_cluster(x, 3).assignment, (std::vector<int>{0, 1, 2}));
    EXPECT_EQ(agglomerative_cluster(x, 1).assignment, (std::vector<int>{0, 0, 0}));
    EXPECT_THROW(agglomerative_cluster(x, 4), ValidationError);
}

TEST(Agglomerative, ClosestPairMergesFirst) {
    EXPECT_EQ(agglomerative_cluster(column({0.0, 1.0, 10.0}), 2).assignment, (std::vector<int>{0, 0, 1}));
}

TEST(Agglomerative, EqualDistancesMergeLowestPair) {
    // d(0,1) == d(1,2): pair (0,1) wins.
    EXPECT_EQ(agglomerative_cluster(column({0.0, 1.0, 2.0}), 2).assignment, (std::vector<int>{0, 0, 1}));
}

TEST(Agglomerative, MatchesBruteForceAverageLinkage) {
    std::mt19937_64 rng(77);
    for (int trial = 0; trial < 150; ++trial) {
        const std::size_t n = 2 + rng() % 14;
        const Matrix x = random_points(rng, n, 1 + static_cast<int>(rng() % 3));
        const std::size_t k = 1 + rng() % n;
        EXPECT_EQ(partition(agglomerative_cluster(x, k)), brute_average_linkage(x, k)) << "trial " << trial;
    }
}
