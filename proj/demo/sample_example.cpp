// Builds every index over the 20-point sample in data/sample_2d.csv and asks each
// one for the entropy of the square [2, 6] x [2, 6].

#include <cstdio>
#include <string>

#include "rqe/approx_renyi.hpp"
#include "rqe/approx_shannon.hpp"
#include "rqe/exact1d.hpp"
#include "rqe/exactnd.hpp"
#include "rqe/io.hpp"
#include "rqe/oracle.hpp"
#include "rqe/sweep1d.hpp"

int main(int argc, char** argv) {
    const std::string dir = argc > 1 ? argv[1] : "data";
    try {
        const auto plane = rqe::read_points_file(dir + "/sample_2d.csv");
        const auto line = rqe::read_points_file(dir + "/sample_1d.csv");
        const rqe::query_rect square{{2, 2}, {6, 6}};
        const auto shannon = rqe::entropy_kind::shannon();
        const rqe::entropy_kind collision{2.0};

        const auto h = rqe::oracle::brute_histogram(plane.points, square);
        std::printf("points in range:");
        for (const auto& [c, w] : h.entries()) std::printf(" %s=%g", plane.color_names[c].c_str(), w);
        std::printf("\n");

        std::printf("%-22s %10s %10s\n", "method", "H", "H_2");
        std::printf("%-22s %10.4f %10.4f\n", "brute force", rqe::oracle::brute_entropy(plane.points, square, shannon).value,
                    rqe::oracle::brute_entropy(plane.points, square, collision).value);

        const rqe::exactnd_index nd(plane.points, 0.5, {2.0});
        std::printf("%-22s %10.4f %10.4f\n", "exactnd", nd.query(square, shannon).value, nd.query(square, collision).value);

        const rqe::exact1d_index d1(line.points, 0.5, {2.0});
        std::printf("%-22s %10.4f %10.4f\n", "exact1d (x only)", d1.query(2, 6, shannon).value,
                    d1.query(2, 6, collision).value);

        const rqe::sweep1d_index sw_h(line.points, shannon, 0.1);
        const rqe::sweep1d_index sw_2(line.points, collision, 0.1);
        std::printf("%-22s %10.4f %10.4f\n", "sweep1d eps=0.1", sw_h.query(2, 6).value, sw_2.query(2, 6).value);

        const rqe::sampling_index samp(plane.points);
        rqe::estimator_config cfg;
        cfg.exact_fallback = false;
        rqe::rng_type rng(2024);
        const auto a = rqe::estimate_additive(samp, square, 0.1, cfg, rng);
        const auto b = rqe::estimate_additive_renyi(samp, square, 2.0, 0.1, cfg, rng);
        std::printf("%-22s %10.4f %10.4f   (%zu + %zu samples)\n", "sampled, delta=0.1", a.summary.value, b.summary.value,
                    a.samples, b.samples);
    } catch (const rqe::error& e) {
        std::fprintf(stderr, "sample_example: %s\n", e.what());
        return 1;
    }
    return 0;
}
