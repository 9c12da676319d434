#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "rqe/io.hpp"
#include "rqe/oracle.hpp"

using namespace rqe;

namespace {

const query_rect sample_range{{2.0, 2.0}, {6.0, 6.0}};

oracle::bool_matrix random_matrix(std::size_t s, std::mt19937_64& rng, double density) {
    std::bernoulli_distribution bit(density);
    oracle::bool_matrix m(s, std::vector<std::uint8_t>(s));
    for (auto& row : m)
        for (auto& v : row) v = bit(rng);
    return m;
}

void check_matrix_predicates(const oracle::bool_matrix& a, const oracle::bool_matrix& b) {
    const auto g = oracle::build_matrix_gadget(a, b);
    const auto c = oracle::boolean_product(a, b);
    for (std::size_t i = 0; i < a.size(); ++i) {
        for (std::size_t j = 0; j < a.size(); ++j) {
            for (entropy_kind k : {entropy_kind::shannon(), entropy_kind{2.0}, entropy_kind{3.0}}) {
                const double h = oracle::brute_entropy(g.points, g.query(i, j), k).value;
                const bool equal = std::fabs(h - g.predicted(i, j, k)) < 1e-9;
                ASSERT_EQ(equal, c[i][j] == 0) << "entry " << i << "," << j << " order " << k.alpha;
            }
        }
    }
}

}  // namespace

TEST(BruteEntropy, SampleRange) {
    const auto ds = read_points_file(RQE_DATA "/sample_2d.csv");
    ASSERT_EQ(ds.points.size(), 20u);
    EXPECT_NEAR(oracle::brute_entropy(ds.points, sample_range, entropy_kind::shannon()).value, 1.5305, 1e-4);
    EXPECT_NEAR(oracle::brute_entropy(ds.points, sample_range, entropy_kind{2.0}).value, 1.4818, 1e-4);
    const auto h = oracle::brute_histogram(ds.points, sample_range);
    EXPECT_EQ(h.at(0), 2.0);  // red
    EXPECT_EQ(h.at(1), 3.0);  // green
    EXPECT_EQ(h.at(2), 4.0);  // blue
}

TEST(BruteEntropy, EmptyRangeIsZero) {
    const auto ds = read_points_file(RQE_DATA "/sample_2d.csv");
    const auto s = oracle::brute_entropy(ds.points, query_rect{{100, 100}, {101, 101}}, entropy_kind::shannon());
    EXPECT_EQ(s.count, 0.0);
    EXPECT_EQ(s.value, 0.0);
}

TEST(MatrixGadget, SmallThreeByThreeInstance) {
    const oracle::bool_matrix a{{1, 0, 1}, {0, 1, 0}, {1, 1, 0}};
    const oracle::bool_matrix b{{0, 1, 1}, {1, 1, 1}, {0, 0, 0}};
    const auto g = oracle::build_matrix_gadget(a, b);
    EXPECT_EQ(g.points.size(), 18u);
    EXPECT_EQ(g.points.num_colors(), 3u);
    EXPECT_EQ(g.query(1, 1).lo[0], 6.0);
    EXPECT_EQ(g.query(1, 1).hi[0], 14.0);
    check_matrix_predicates(a, b);
}

TEST(MatrixGadget, ZeroMatrices) {
    const oracle::bool_matrix z(4, std::vector<std::uint8_t>(4, 0));
    check_matrix_predicates(z, z);
}

TEST(MatrixGadget, AllThreeByThreePairsSampled) {
    std::mt19937_64 rng(3);
    for (int trial = 0; trial < 200; ++trial) check_matrix_predicates(random_matrix(3, rng, 0.5), random_matrix(3, rng, 0.5));
}

TEST(MatrixGadget, RandomEightByEight) {
    std::mt19937_64 rng(8);
    for (int trial = 0; trial < 20; ++trial) {
        const double density = 0.05 + 0.05 * (trial % 6);
        check_matrix_predicates(random_matrix(8, rng, density), random_matrix(8, rng, density));
    }
}

TEST(SetGadget, DisjointnessPredicate) {
    std::mt19937_64 rng(12);
    for (int trial = 0; trial < 30; ++trial) {
        const std::size_t g = 2 + trial % 8;
        std::vector<std::vector<std::uint32_t>> sets(g);
        std::uniform_int_distribution<std::uint32_t> item(0, 30);
        for (auto& s : sets) {
            std::uniform_int_distribution<int> size(1, 6);
            const int m = size(rng);
            while (int(s.size()) < m) {
                const auto v = item(rng);
                if (std::find(s.begin(), s.end(), v) == s.end()) s.push_back(v);
            }
        }
        const auto gad = oracle::build_set_intersection_gadget(sets);
        EXPECT_EQ(gad.points.size(), 2 * std::accumulate(sets.begin(), sets.end(), std::size_t(0),
                                                       [](std::size_t a, const auto& s) { return a + s.size(); }));
        for (std::size_t i = 0; i < g; ++i) {
            for (std::size_t j = 0; j < g; ++j) {
                bool disjoint = true;
                for (auto v : sets[i])
                    if (std::find(sets[j].begin(), sets[j].end(), v) != sets[j].end()) disjoint = false;
                const auto h = oracle::brute_histogram(gad.points, gad.query(i, j));
                ASSERT_EQ(h.total(), gad.sizes[i * g + j]);
                const double logn = std::log2(gad.sizes[i * g + j]);
                EXPECT_EQ(std::fabs(shannon_entropy(h).value - logn) < 1e-9, disjoint);
                EXPECT_EQ(std::fabs(renyi_entropy(h, 2.0).value - logn) < 1e-9, disjoint);
            }
        }
    }
}

TEST(Exhaustive, SmallSequences) {
    const std::vector<color_id> aabb{0, 0, 1, 1};
    const auto r = oracle::exhaustive_maxpart(aabb, 2);
    EXPECT_EQ(r.value, 0.0);
    EXPECT_EQ(r.cuts, (std::vector<std::size_t>{0, 2, 4}));
    EXPECT_NEAR(oracle::exhaustive_sumpart(aabb, 1).value, 1.0, 1e-12);
    EXPECT_EQ(oracle::exhaustive_maxpart(aabb, 4).value, 0.0);
    EXPECT_THROW(oracle::exhaustive_maxpart(aabb, 5), error);
}
