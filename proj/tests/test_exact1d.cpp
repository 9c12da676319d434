#include <gtest/gtest.h>

#include <cmath>

#include "rqe/exact1d.hpp"
#include "rqe/io.hpp"
#include "rqe/oracle.hpp"
#include "test_support.hpp"

using namespace rqe;
using rqe::testing::random_points;
using rqe::testing::random_rect;

TEST(Exact1d, SampleProjection) {
    const auto ds = read_points_file(RQE_DATA "/sample_1d.csv");
    for (double t : {0.0, 0.25, 0.5, 1.0}) {
        exact1d_index idx(ds.points, t, {2.0});
        EXPECT_NEAR(idx.query(2, 6, entropy_kind::shannon()).value, 1.5305, 1e-4);
        EXPECT_NEAR(idx.query(2, 6, entropy_kind{2.0}).value, 1.4818, 1e-4);
        EXPECT_EQ(idx.query(2, 6, entropy_kind::shannon()).count, 9.0);
    }
}

TEST(Exact1d, UnindexedOrderIsRejected) {
    const auto pts = random_points(50, 1, 4, 1);
    exact1d_index idx(pts, 0.5, {2.0});
    try {
        idx.query(0, 100, entropy_kind{3.0});
        FAIL();
    } catch (const error& e) {
        EXPECT_EQ(e.which(), error::order_not_indexed);
    }
}

TEST(Exact1d, BucketLayout) {
    const auto pts = random_points(100, 1, 4, 2);
    exact1d_index idx(pts, 0.5, {});
    EXPECT_EQ(idx.bucket_size(), 10u);
    EXPECT_EQ(idx.num_buckets(), 10u);
    EXPECT_EQ(idx.table_entries(), 55u);
    exact1d_index all(pts, 1.0, {});
    EXPECT_EQ(all.num_buckets(), 1u);
}

TEST(Exact1d, IncrementalTableEqualsNaive) {
    const auto pts = random_points(300, 1, 7, 3, 200, true);
    exact1d_index a(pts, 0.5, {1.5, 3.0}, build_strategy::incremental);
    exact1d_index b(pts, 0.5, {1.5, 3.0}, build_strategy::naive);
    for (std::size_t i = 0; i < a.num_buckets(); ++i)
        for (std::size_t j = i; j < a.num_buckets(); ++j)
            for (const auto& k : a.kinds()) EXPECT_NEAR(a.table_entry(i, j, k).value, b.table_entry(i, j, k).value, 1e-9);
}

class Exact1dVsOracle : public ::testing::TestWithParam<double> {};

TEST_P(Exact1dVsOracle, RandomIntervals) {
    const double t = GetParam();
    const auto pts = random_points(500, 1, 9, 17, 300, true);
    exact1d_index idx(pts, t, {1.5, 2.0, 3.0});
    std::mt19937_64 rng(5);
    for (int q = 0; q < 300; ++q) {
        const auto r = random_rect(1, rng, 300);
        for (const auto& k : idx.kinds()) {
            const auto want = oracle::brute_entropy(pts, r, k);
            const auto got = idx.query(r, k);
            ASSERT_NEAR(got.value, want.value, 1e-6) << "t=" << t << " order " << k.alpha;
            ASSERT_NEAR(got.count, want.count, 1e-9);
        }
    }
}

INSTANTIATE_TEST_SUITE_P(Exponents, Exact1dVsOracle, ::testing::Values(0.0, 0.25, 0.5, 0.75, 1.0));

TEST(Exact1d, FringeStaysWithinTwoBuckets) {
    const auto pts = random_points(2000, 1, 16, 4, 100000);
    exact1d_index idx(pts, 0.5, {});
    std::mt19937_64 rng(1);
    for (int q = 0; q < 200; ++q) {
        query_stats st;
        idx.query(random_rect(1, rng, 100000), entropy_kind::shannon(), &st);
        EXPECT_LE(st.fringe_points, 2 * idx.bucket_size());
        EXPECT_LE(st.table_lookups, 1u);
    }
}

TEST(Exact1d, RejectsBadInput) {
    EXPECT_THROW(exact1d_index(random_points(10, 2, 2, 1), 0.5), error);
    EXPECT_THROW(exact1d_index(random_points(10, 1, 2, 1), 1.5), error);
    exact1d_index empty(colored_point_set(1, std::vector<point>{}), 0.5);
    EXPECT_EQ(empty.query(0, 1, entropy_kind::shannon()).value, 0.0);
}
