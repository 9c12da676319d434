#include <gtest/gtest.h>

#include <algorithm>
#include <map>
#include <random>
#include <set>

#include "rqe/oracle.hpp"
#include "rqe/rangetree.hpp"

using namespace rqe;

namespace {

colored_point_set random_points(std::size_t n, std::size_t d, std::uint32_t colors, std::uint64_t seed,
                                bool weighted = false) {
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<int> coord(0, 40);
    std::uniform_int_distribution<std::uint32_t> col(0, colors - 1);
    std::uniform_real_distribution<double> w(0.5, 3.0);
    std::vector<point> pts;
    for (std::size_t i = 0; i < n; ++i) {
        point p;
        for (std::size_t k = 0; k < d; ++k) p.coords.push_back(coord(rng));
        p.color = col(rng);
        p.weight = weighted ? w(rng) : 1.0;
        pts.push_back(p);
    }
    return colored_point_set(d, pts);
}

query_rect random_rect(std::size_t d, std::mt19937_64& rng) {
    std::uniform_int_distribution<int> coord(-2, 42);
    query_rect r;
    for (std::size_t k = 0; k < d; ++k) {
        int a = coord(rng), b = coord(rng);
        if (a > b) std::swap(a, b);
        r.lo.push_back(a);
        r.hi.push_back(b);
    }
    return r;
}

}  // namespace

class RangeTreeDims : public ::testing::TestWithParam<std::size_t> {};

TEST_P(RangeTreeDims, CanonicalNodesPartitionTheRange) {
    const std::size_t d = GetParam();
    const auto pts = random_points(300, d, 6, 11 * d);
    range_tree tree(pts, true);
    std::mt19937_64 rng(d);
    for (int q = 0; q < 200; ++q) {
        const auto r = random_rect(d, rng);
        std::multiset<std::uint32_t> got;
        for (const auto& v : tree.canonical_nodes(r))
            for (auto id : tree.node_points(v)) got.insert(id);
        std::multiset<std::uint32_t> want;
        for (std::uint32_t i = 0; i < pts.size(); ++i)
            if (r.contains(pts.coords(i))) want.insert(i);
        ASSERT_EQ(got, want);
        EXPECT_EQ(tree.range_count(r), want.size());
    }
}

TEST_P(RangeTreeDims, PerColorWeightsMatchBruteForce) {
    const std::size_t d = GetParam();
    const auto pts = random_points(250, d, 5, 3 + d, true);
    range_tree tree(pts, true);
    per_color_trees by_color(pts);
    std::mt19937_64 rng(100 + d);
    for (int q = 0; q < 100; ++q) {
        const auto r = random_rect(d, rng);
        const auto h = oracle::brute_histogram(pts, r);
        for (color_id c = 0; c < 5; ++c) {
            double via_nodes = 0;
            for (const auto& v : tree.canonical_nodes(r)) via_nodes += tree.node_color_weight(v, c);
            EXPECT_NEAR(via_nodes, h.at(c), 1e-9);
            EXPECT_NEAR(by_color.color_range_count(r, c), h.at(c), 1e-9);
        }
        EXPECT_NEAR(tree.range_weight(r), h.total(), 1e-9);
    }
}

INSTANTIATE_TEST_SUITE_P(Dims, RangeTreeDims, ::testing::Values(1u, 2u, 3u));

TEST(RangeTree, EmptyTreeAndEmptyRange) {
    colored_point_set none(2, std::vector<point>{});
    range_tree t(none);
    EXPECT_TRUE(t.canonical_nodes(query_rect::everything(2)).empty());
    const auto pts = random_points(20, 1, 2, 1);
    range_tree u(pts);
    EXPECT_TRUE(u.canonical_nodes(query_rect::interval(5, 4)).empty());
    EXPECT_THROW(u.canonical_nodes(query_rect::everything(2)), error);
}

TEST(RangeTree, SamplingFollowsWeights) {
    std::vector<point> v;
    for (int i = 0; i < 40; ++i) v.push_back({{double(i)}, color_id(i % 4), double(1 + i % 4)});
    colored_point_set pts(1, v);
    range_tree tree(pts, true);
    rng_type rng(5);
    const auto r = query_rect::interval(3, 30);
    const auto nodes = tree.canonical_nodes(r);
    std::map<color_id, double> freq;
    const int draws = 60000;
    for (int i = 0; i < draws; ++i) {
        const auto id = tree.sample(nodes, rng);
        ASSERT_TRUE(r.contains(pts.coords(id)));
        freq[pts.color(id)] += 1.0 / draws;
    }
    const auto h = oracle::brute_histogram(pts, r);
    for (color_id c = 0; c < 4; ++c) EXPECT_NEAR(freq[c], h.at(c) / h.total(), 0.01);
}

TEST(RangeTree, SamplingExcludingNeverReturnsExcluded) {
    const auto pts = random_points(200, 2, 3, 9);
    range_tree tree(pts, true);
    rng_type rng(2);
    const auto r = query_rect::everything(2);
    std::map<color_id, int> freq;
    for (int i = 0; i < 20000; ++i) ++freq[pts.color(tree.sample_excluding(r, 1, rng))];
    EXPECT_EQ(freq.count(1), 0u);
    const auto h = oracle::brute_histogram(pts, r);
    const double rest = h.total() - h.at(1);
    EXPECT_NEAR(freq[0] / 20000.0, h.at(0) / rest, 0.02);
}

TEST(RangeTree, FootprintGrowsWithDimension) {
    const auto p1 = random_points(512, 1, 3, 1);
    const auto p2 = random_points(512, 2, 3, 1);
    EXPECT_EQ(range_tree(p1).footprint(), 512u);
    EXPECT_GT(range_tree(p2).footprint(), 512u * 9);
}
