#include <gtest/gtest.h>

#include <sstream>

#include "rqe/io.hpp"
#include "rqe/persistence.hpp"
#include "test_support.hpp"

using namespace rqe;
using rqe::testing::random_points;
using rqe::testing::random_rect;

namespace {

template <class Index>
Index round_trip(const Index& idx) {
    std::stringstream ss;
    save_index(ss, idx);
    return load_index<Index>(ss);
}

template <class Index>
std::string bytes_of(const Index& idx) {
    std::stringstream ss;
    save_index(ss, idx);
    return ss.str();
}

error::code load_error(const std::string& bytes) {
    std::istringstream in(bytes);
    try {
        load_index<exact1d_index>(in);
    } catch (const error& e) {
        return e.which();
    }
    return error::invalid_argument;
}

}  // namespace

TEST(Persistence, Exact1dRoundTrip) {
    const auto pts = random_points(400, 1, 9, 1, 500, true);
    exact1d_index idx(pts, 0.5, {2.0, 3.0});
    const auto back = round_trip(idx);
    std::mt19937_64 rng(1);
    for (int q = 0; q < 100; ++q) {
        const auto r = random_rect(1, rng, 500);
        for (const auto& k : idx.kinds()) EXPECT_EQ(idx.query(r, k).value, back.query(r, k).value);
    }
}

TEST(Persistence, ExactNdRoundTripBothModes) {
    const auto pts = random_points(300, 2, 7, 2, 60);
    for (table_mode m : {table_mode::eager, table_mode::scan}) {
        exactnd_index idx(pts, 0.5, {2.0}, {m});
        const auto back = round_trip(idx);
        EXPECT_EQ(back.eager(), idx.eager());
        std::mt19937_64 rng(2);
        for (int q = 0; q < 100; ++q) {
            const auto r = random_rect(2, rng, 60);
            EXPECT_EQ(idx.query(r, entropy_kind::shannon()).value, back.query(r, entropy_kind::shannon()).value);
            EXPECT_EQ(idx.query(r, entropy_kind{2.0}).value, back.query(r, entropy_kind{2.0}).value);
        }
    }
}

TEST(Persistence, SweepRoundTrip) {
    const auto pts = random_points(500, 1, 20, 3, 800);
    for (entropy_kind k : {entropy_kind::shannon(), entropy_kind{3.0}}) {
        sweep1d_index idx(pts, k, 0.2);
        const auto back = round_trip(idx);
        std::mt19937_64 rng(3);
        for (int q = 0; q < 100; ++q) {
            const auto r = random_rect(1, rng, 800);
            EXPECT_EQ(idx.query(r).value, back.query(r).value);
        }
    }
}

TEST(Persistence, SamplingRoundTripGivesSameDraws) {
    const auto pts = random_points(300, 2, 6, 4, 100, true);
    sampling_index idx(pts);
    const auto back = round_trip(idx);
    std::mt19937_64 qrng(4);
    estimator_config cfg;
    cfg.exact_fallback = false;
    for (int q = 0; q < 100; ++q) {
        const auto r = random_rect(2, qrng, 100);
        if (idx.tree().range_weight(r) <= 0) continue;
        rng_type a(q), b(q);
        EXPECT_EQ(estimate_additive(idx, r, 0.5, cfg, a).summary.value, estimate_additive(back, r, 0.5, cfg, b).summary.value);
    }
}

TEST(Persistence, HeaderLayout) {
    const auto bytes = bytes_of(exact1d_index(random_points(10, 1, 2, 5), 0.5));
    ASSERT_GE(bytes.size(), 15u);
    EXPECT_EQ(bytes.substr(0, 7), "RQEIDX1");
    EXPECT_EQ(bytes[7], 1);
    EXPECT_EQ(bytes[11], 1);
}

TEST(Persistence, CorruptInputsAreRejected) {
    const auto good = bytes_of(exact1d_index(random_points(200, 1, 5, 6), 0.5));
    EXPECT_EQ(load_error(""), error::not_an_index);
    EXPECT_EQ(load_error("NOTANIDX-and-more-bytes"), error::not_an_index);
    EXPECT_EQ(load_error(good.substr(0, 9)), error::not_an_index);
    EXPECT_EQ(load_error(good.substr(0, good.size() / 2)), error::not_an_index);

    auto newer = good;
    newer[7] = 2;
    EXPECT_EQ(load_error(newer), error::unsupported_version);

    const auto other = bytes_of(sampling_index(random_points(20, 1, 2, 7)));
    EXPECT_EQ(load_error(other), error::index_kind_mismatch);
}

TEST(Ingest, SampleRowsRoundTripToHistogram) {
    const auto ds = read_points_file(RQE_DATA "/sample_range.csv");
    ASSERT_EQ(ds.points.size(), 9u);
    EXPECT_EQ(ds.color_names, (std::vector<std::string>{"red", "green", "blue"}));
    color_histogram h;
    for (std::size_t i = 0; i < ds.points.size(); ++i) h.add(ds.points.color(i), ds.points.weight(i));
    EXPECT_EQ(h.at(0), 2.0);
    EXPECT_EQ(h.at(1), 3.0);
    EXPECT_EQ(h.at(2), 4.0);
    std::stringstream ss;
    write_points(ss, ds.points, ds.color_names);
    const auto again = read_points(ss);
    EXPECT_EQ(again.points.raw_coords(), ds.points.raw_coords());
    EXPECT_EQ(again.points.raw_colors(), ds.points.raw_colors());
}

TEST(Ingest, HeaderOnlyAndTsv) {
    std::istringstream empty("x1,x2,color\n");
    EXPECT_EQ(read_points(empty).points.size(), 0u);
    std::istringstream tsv("x1\tcolor\tweight\n1.5\ta\t2\n2.5\tb\t0.5\n");
    const auto ds = read_points(tsv);
    EXPECT_EQ(ds.points.size(), 2u);
    EXPECT_EQ(ds.points.weight(0), 2.0);
}

TEST(Ingest, ErrorsCarryLineNumbers) {
    auto fails = [](const std::string& text, error::code want, const std::string& needle) {
        std::istringstream in(text);
        try {
            read_points(in);
        } catch (const error& e) {
            EXPECT_EQ(e.which(), want) << e.what();
            EXPECT_NE(std::string(e.what()).find(needle), std::string::npos) << e.what();
            return;
        }
        ADD_FAILURE() << "no error for " << text;
    };
    fails("x1,x2,color\n1,2,a\n3,b\n", error::dimension_mismatch, "line 3");
    fails("x1,color,weight\n1,a,1\n2,b,-1\n", error::invalid_weight, "line 3");
    fails("x1,color\n1,a\ninf,b\n", error::data_error, "line 3");
    fails("x1,color\nfoo,a\n", error::data_error, "line 2");
    fails("", error::data_error, "header");
    fails("x1,x3,color\n", error::dimension_mismatch, "x2");
}

TEST(Ingest, LargeSyntheticFile) {
    std::stringstream ss;
    ss << "x1,x2,color\n";
    std::vector<int> per(7, 0);
    for (int i = 0; i < 100000; ++i) {
        ss << (i % 977) << ',' << (i % 313) * 0.5 << ",c" << (i % 7) << '\n';
        ++per[i % 7];
    }
    const auto ds = read_points(ss);
    ASSERT_EQ(ds.points.size(), 100000u);
    std::vector<int> got(7, 0);
    for (std::size_t i = 0; i < ds.points.size(); ++i) ++got[ds.points.color(i)];
    EXPECT_EQ(got, per);
}
