#include <gtest/gtest.h>

#include <cmath>
#include <set>

#include "rqe/io.hpp"
#include "rqe/oracle.hpp"
#include "rqe/sweep1d.hpp"
#include "test_support.hpp"

using namespace rqe;
using rqe::testing::random_points;

namespace {

bool shannon_ok(double h, double truth, double eps) {
    return h >= truth - 1e-9 && h <= (1 + eps) * truth + eps + 1e-9;
}

bool renyi_ok(double h, double truth, double eps, double alpha) {
    return h >= truth - 1e-9 && h <= truth + eps * (alpha + 1) / (alpha - 1) + 1e-9;
}

}  // namespace

TEST(Lifting, EachColorOnceInTheLiftedBox) {
    const auto pts = random_points(150, 1, 12, 1, 60);
    sweep1d_index idx(pts, entropy_kind::shannon(), 0.3);
    for (int l = -1; l <= 61; l += 3) {
        for (int r = l; r <= 61; r += 4) {
            std::multiset<color_id> lifted;
            for (std::uint32_t i = 0; i < idx.size(); ++i)
                if (idx.lifted_x(i) >= l && idx.lifted_x(i) <= r && idx.lifted_prev(i) < l) lifted.insert(idx.lifted_color(i));
            std::set<color_id> present;
            for (std::size_t i = 0; i < pts.size(); ++i)
                if (pts.coord(i, 0) >= l && pts.coord(i, 0) <= r) present.insert(pts.color(i));
            ASSERT_EQ(lifted.size(), present.size());
            ASSERT_EQ(std::set<color_id>(lifted.begin(), lifted.end()), present);
        }
    }
}

TEST(Sweep, SampleProjectionShannon) {
    const auto ds = read_points_file(RQE_DATA "/sample_1d.csv");
    sweep1d_index idx(ds.points, entropy_kind::shannon(), 0.2);
    const double h = idx.query(2, 6).value;
    EXPECT_GE(h, 1.5305 - 1e-4);
    EXPECT_LE(h, 1.2 * 1.5305 + 0.2);
}

TEST(Sweep, SampleProjectionRenyi) {
    const auto ds = read_points_file(RQE_DATA "/sample_1d.csv");
    sweep1d_index idx(ds.points, entropy_kind{2.0}, 0.2);
    const double h = idx.query(2, 6).value;
    EXPECT_GE(h, 1.4818 - 1e-4);
    EXPECT_LE(h, 1.4818 + 0.2 * 3);
}

TEST(Sweep, EmptyRange) {
    const auto pts = random_points(50, 1, 4, 2, 100);
    sweep1d_index idx(pts, entropy_kind::shannon(), 0.2);
    EXPECT_EQ(idx.query(500, 600).value, 0.0);
    EXPECT_EQ(idx.query(7, 3).count, 0.0);
}

class SweepBounds : public ::testing::TestWithParam<std::tuple<double, long long>> {};

TEST_P(SweepBounds, ShannonAndRenyiHoldForEveryQuery) {
    const auto [eps, small] = GetParam();
    const auto pts = random_points(400, 1, 20, 7, 500);
    sweep1d_index sh(pts, entropy_kind::shannon(), eps, {small});
    std::vector<sweep1d_index> rn;
    for (double a : {1.5, 2.0, 3.0}) rn.emplace_back(pts, entropy_kind{a}, eps, sweep_options{small});
    std::mt19937_64 rng(11);
    for (int q = 0; q < 500; ++q) {
        const auto r = rqe::testing::random_rect(1, rng, 500);
        const double h = oracle::brute_entropy(pts, r, entropy_kind::shannon()).value;
        ASSERT_TRUE(shannon_ok(sh.query(r).value, h, eps)) << r.lo[0] << " " << r.hi[0];
        for (const auto& idx : rn) {
            const double ha = oracle::brute_entropy(pts, r, idx.kind()).value;
            ASSERT_TRUE(renyi_ok(idx.query(r).value, ha, eps, idx.kind().alpha));
        }
    }
}

INSTANTIATE_TEST_SUITE_P(Params, SweepBounds,
                         ::testing::Combine(::testing::Values(0.1, 0.3), ::testing::Values(-1LL, 0LL, 1000LL)));

TEST(Sweep, StoredRunsMatchDirectPrefixComputation) {
    for (entropy_kind k : {entropy_kind::shannon(), entropy_kind{2.0}}) {
        const auto pts = random_points(300, 1, 40, 3, 400);
        sweep1d_index idx(pts, k, 0.3, {0});
        const auto nodes = idx.stored_nodes();
        ASSERT_GT(nodes.size(), 0u);
        for (const auto& v : nodes) {
            // every coordinate where some member color occurs from its start on
            std::set<double> events;
            for (auto id : v.members)
                for (std::size_t i = 0; i < pts.size(); ++i)
                    if (pts.color(i) == idx.lifted_color(id) && pts.coord(i, 0) >= idx.lifted_x(id)) events.insert(pts.coord(i, 0));
            ASSERT_EQ(v.runs.front().x, *events.begin());
            for (double x : events) {
                std::vector<double> counts;
                double n = 0;
                for (auto id : v.members) {
                    counts.push_back(idx.count_from(id, x));
                    n += counts.back();
                }
                std::size_t r = 0;
                while (r + 1 < v.runs.size() && v.runs[r + 1].x <= x) ++r;
                ASSERT_EQ(v.runs[r].s, idx.level(n));
                ASSERT_EQ(v.runs[r].h, idx.level(idx.secondary_value(counts)));
            }
            for (bool of_count : {true, false}) {
                const auto s = idx.threshold_array(v, of_count);
                ASSERT_TRUE(std::is_sorted(s.begin(), s.end()));
                const double cap = k.is_shannon() ? std::log(300 * std::log2(300.0) + 2) : std::log(std::pow(300.0, 2) + 2);
                ASSERT_LE(double(s.size()), cap / std::log1p(idx.inner_epsilon()) + 2);
            }
        }
    }
}

TEST(Sweep, PerNodeSandwich) {
    const auto pts = random_points(300, 1, 30, 5, 300);
    sweep1d_index idx(pts, entropy_kind::shannon(), 0.2);
    const double e = idx.inner_epsilon();
    std::mt19937_64 rng(2);
    for (int q = 0; q < 200; ++q) {
        const auto r = rqe::testing::random_rect(1, rng, 300);
        for (const auto& v : idx.canonical(r.lo[0], r.hi[0])) {
            color_histogram h;
            for (std::size_t i = 0; i < pts.size(); ++i) {
                if (pts.coord(i, 0) < r.lo[0] || pts.coord(i, 0) > r.hi[0]) continue;
                if (std::find(v.colors.begin(), v.colors.end(), pts.color(i)) != v.colors.end()) h.add(pts.color(i), 1);
            }
            ASSERT_EQ(h.distinct(), v.colors.size());
            const double truth = shannon_entropy(h).value;
            const double est = v.h == sweep1d_index::zero_level ? 0.0 : idx.power(v.h) / (v.s == 0 ? 1 / (1 + e) : idx.power(v.s - 1));
            EXPECT_GE(est, truth - 1e-9);
            EXPECT_LE(est, (1 + e) * (1 + e) * truth + 1e-9);
        }
    }
}

TEST(Sweep, MergeDepthIsLogOfNodeCount) {
    const auto pts = random_points(2000, 1, 50, 9, 5000);
    sweep1d_index idx(pts, entropy_kind::shannon(), 0.2);
    std::mt19937_64 rng(4);
    for (int q = 0; q < 100; ++q) {
        const auto r = rqe::testing::random_rect(1, rng, 5000);
        sweep_query_stats st;
        idx.query(r, &st);
        if (st.canonical_nodes > 0)
            EXPECT_LE(st.merge_depth, std::size_t(std::ceil(std::log2(double(st.canonical_nodes)))));
    }
}

TEST(Sweep, OneColorEverywhere) {
    std::vector<point> v;
    for (int i = 0; i < 64; ++i) v.push_back({{double(i)}, 0, 1.0});
    sweep1d_index idx(colored_point_set(1, v), entropy_kind::shannon(), 0.2, {0});
    EXPECT_EQ(idx.query(3, 40).value, 0.0);
    for (const auto& n : idx.stored_nodes()) EXPECT_EQ(n.members.size(), 1u);
}

TEST(Sweep, RejectsWeightsAndBadEpsilon) {
    EXPECT_THROW(sweep1d_index(random_points(20, 1, 3, 1, 100, true), entropy_kind::shannon(), 0.2), error);
    EXPECT_THROW(sweep1d_index(random_points(20, 1, 3, 1), entropy_kind::shannon(), 1.2), error);
    EXPECT_THROW(sweep1d_index(random_points(20, 2, 3, 1), entropy_kind::shannon(), 0.2), error);
}
