#include <gtest/gtest.h>

#include <cmath>

#include "rqe/approx_renyi.hpp"
#include "rqe/oracle.hpp"

using namespace rqe;

namespace {

colored_point_set from_counts(const std::vector<int>& counts) {
    std::vector<point> v;
    for (std::size_t c = 0; c < counts.size(); ++c)
        for (int i = 0; i < counts[c]; ++i) v.push_back({{0.0}, color_id(c), 1.0});
    for (std::size_t i = 0; i < v.size(); ++i) v[i].coords[0] = double((i * 7919) % v.size());
    return colored_point_set(1, v);
}

estimator_config sampled() {
    estimator_config cfg;
    cfg.exact_fallback = false;
    return cfg;
}

const query_rect all = query_rect::everything(1);

}  // namespace

TEST(Moment, SingleColorIsOne) {
    sampling_index idx(from_counts({25}));
    rng_type rng(1);
    const auto m = estimate_moment(idx, all, 2.0, 0.5, sampled(), rng);
    EXPECT_DOUBLE_EQ(m.value, 1.0);
}

TEST(Moment, SkewedCountsUnbiased) {
    sampling_index idx(from_counts({8, 4, 2, 1, 1}));
    rng_type rng(2);
    // mean of 10^5 draws of p^(alpha-1); truth 86/256
    const dual_access_oracle o(idx, all);
    double s = 0, s2 = 0;
    const int draws = 100000;
    for (int i = 0; i < draws; ++i) {
        const double x = o.eval(o.samp(rng));
        s += x;
        s2 += x * x;
    }
    const double mean = s / draws;
    const double sd = std::sqrt((s2 / draws - mean * mean) / draws);
    EXPECT_NEAR(mean, 86.0 / 256.0, 3 * sd);
}

TEST(Moment, UniformSixteenWithinEpsilon) {
    std::vector<int> counts(16, 20);
    sampling_index idx(from_counts(counts));
    int ok = 0;
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
        rng_type rng(seed);
        const auto m = estimate_moment(idx, all, 2.0, 0.2, sampled(), rng);
        ok += std::fabs(m.value - 1.0 / 16.0) <= 0.2 / 16.0;
    }
    EXPECT_GE(ok, 95);
}

TEST(Moment, ExcludingHeavyColor) {
    sampling_index idx(from_counts({100, 10, 10}));
    int ok = 0;
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
        rng_type rng(seed);
        const auto m = estimate_moment_excluding(idx, all, 2.0, 0.2, 0, sampled(), rng);
        ok += std::fabs(m.value - 0.5) <= 0.1;
    }
    EXPECT_GE(ok, 95);
}

TEST(Moment, ExcludingAbsentColorMatchesPlain) {
    sampling_index idx(from_counts({5, 3, 2}));
    rng_type a(5), b(5);
    const auto m1 = estimate_moment(idx, all, 3.0, 0.3, sampled(), a);
    const auto m2 = estimate_moment_excluding(idx, all, 3.0, 0.3, 77, sampled(), b);
    EXPECT_EQ(m1.value, m2.value);
}

TEST(AdditivePlan, BranchThresholdMatchesDirectFormula) {
    for (double alpha : {1.1, 1.5, 2.0, 3.0, 5.0}) {
        for (double delta : {0.05, 0.1, 0.3, 0.7}) {
            const auto p = plan_additive_renyi(alpha, delta);
            const double so = std::max(1.0, 1.0 / ((alpha - 1) * (alpha - 1))) * alpha / (delta * delta);
            const double da = 1.0 / std::pow(1.0 - std::pow(2.0, (1.0 - alpha) * delta), 2.0);
            EXPECT_NEAR(p.samples_only_factor, so, 1e-9 * so);
            EXPECT_NEAR(p.dual_access_factor, da, 1e-9 * da);
            EXPECT_EQ(p.branch, da >= so ? renyi_branch::samples_only : renyi_branch::dual_access);
        }
    }
}

TEST(AdditiveRenyi, UniformThirtyTwoAlphaThree) {
    std::vector<int> counts(32, 10);
    sampling_index idx(from_counts(counts));
    int ok = 0;
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
        rng_type rng(seed);
        const auto e = estimate_additive_renyi(idx, all, 3.0, 0.3, sampled(), rng);
        ok += std::fabs(e.summary.value - 5.0) <= 0.3;
    }
    EXPECT_GE(ok, 95);
}

TEST(AdditiveRenyi, OrderValidation) {
    sampling_index idx(from_counts({3, 3}));
    rng_type rng(1);
    try {
        estimate_additive_renyi(idx, all, 1.0, 0.2, sampled(), rng);
        FAIL();
    } catch (const error& e) {
        EXPECT_EQ(e.which(), error::invalid_order);
    }
}

TEST(HeavyRenyi, CombineIdentityWithExactInputs) {
    for (double alpha : {1.5, 2.0, 3.0}) {
        color_histogram h, rest;
        h.add(0, 75);
        for (color_id c = 1; c <= 3; ++c) {
            h.add(c, 5.0 + c);
            rest.add(c, 5.0 + c);
        }
        double full = 0, rm = 0;
        for (const auto& [c, w] : h.entries()) full += std::pow(w / h.total(), alpha);
        for (const auto& [c, w] : rest.entries()) rm += std::pow(w / rest.total(), alpha);
        EXPECT_NEAR(renyi_heavy_combine(h.total(), 75, alpha, rm, full), renyi_entropy(h, alpha).value, 1e-9);
    }
}

TEST(HeavyRenyi, MultiplicativeBoundWithHeavyColor) {
    sampling_index idx(from_counts({300, 33, 33, 34}));
    const double truth = oracle::brute_entropy(idx.points(), all, entropy_kind{2.0}).value;
    int ok = 0, fallback = 0;
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
        rng_type rng(seed);
        const auto e = estimate_multiplicative_renyi(idx, all, 2.0, 0.25, estimator_config{}, rng);
        EXPECT_TRUE(e.heavy);
        fallback += e.fallback;
        ok += e.summary.value >= truth / 1.25 && e.summary.value <= truth * 1.25;
    }
    EXPECT_GE(ok, 48);
    EXPECT_GT(fallback, 0);
}

TEST(HeavyRenyi, SingleColorIsZero) {
    sampling_index idx(from_counts({12}));
    rng_type rng(4);
    EXPECT_EQ(estimate_multiplicative_renyi(idx, all, 2.0, 0.5, estimator_config{}, rng).summary.value, 0.0);
}
