// rqe: ingest colored points, build and persist range-entropy indexes, answer
// queries, run the partitioners and benchmark the structures.
//
// Exit codes: 0 ok, 2 usage, 3 data error, 4 index error.

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <limits>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include "rqe/approx_renyi.hpp"
#include "rqe/approx_shannon.hpp"
#include "rqe/exact1d.hpp"
#include "rqe/exactnd.hpp"
#include "rqe/io.hpp"
#include "rqe/oracle.hpp"
#include "rqe/partition.hpp"
#include "rqe/persistence.hpp"
#include "rqe/sweep1d.hpp"

using json = nlohmann::ordered_json;
using namespace rqe;

namespace {

enum exit_code { ok = 0, usage = 2, data = 3, index_error = 4 };

struct usage_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

int exit_for(const error& e) {
    switch (e.which()) {
        case error::not_an_index:
        case error::unsupported_version:
        case error::index_kind_mismatch:
            return index_error;
        case error::invalid_argument:
        case error::invalid_order:
        case error::order_not_indexed:
        case error::too_many_buckets:
            return usage;
        default:
            return data;
    }
}

double now_us() {
    using namespace std::chrono;
    return double(duration_cast<nanoseconds>(steady_clock::now().time_since_epoch()).count()) / 1e3;
}

/// "lo1:hi1,lo2:hi2" with "*" for an open side.
query_rect parse_rect(const std::string& text) {
    query_rect r;
    std::stringstream ss(text);
    std::string part;
    auto bound = [&](std::string s, double open) {
        s.erase(0, s.find_first_not_of(" \t"));
        s.erase(s.find_last_not_of(" \t") + 1);
        if (s == "*") return open;
        std::size_t used = 0;
        double v = 0;
        try {
            v = std::stod(s, &used);
        } catch (const std::exception&) {
            throw usage_error("bad rectangle bound '" + s + "'");
        }
        if (used != s.size() || !std::isfinite(v)) throw usage_error("bad rectangle bound '" + s + "'");
        return v;
    };
    while (std::getline(ss, part, ',')) {
        const auto colon = part.find(':');
        if (colon == std::string::npos) throw usage_error("rectangle side '" + part + "' needs lo:hi");
        const double big = std::numeric_limits<double>::max();
        r.lo.push_back(bound(part.substr(0, colon), -big));
        r.hi.push_back(bound(part.substr(colon + 1), big));
        if (r.lo.back() > r.hi.back()) throw usage_error("rectangle side '" + part + "' has lo > hi");
    }
    if (r.lo.empty()) throw usage_error("empty rectangle");
    return r;
}

std::vector<double> parse_list(const std::string& text) {
    std::vector<double> out;
    std::stringstream ss(text);
    std::string part;
    while (std::getline(ss, part, ',')) {
        try {
            out.push_back(std::stod(part));
        } catch (const std::exception&) {
            throw usage_error("bad number '" + part + "'");
        }
    }
    return out;
}

entropy_kind kind_from(const std::string& kind, double alpha) {
    if (kind == "shannon") return entropy_kind::shannon();
    return entropy_kind::renyi(alpha);
}

void emit(const json& j, bool as_json) {
    if (as_json) {
        std::cout << j.dump() << "\n";
        return;
    }
    for (const auto& [k, v] : j.items()) std::cout << k << ": " << (v.is_string() ? v.get<std::string>() : v.dump()) << "\n";
}

using any_index = std::variant<exact1d_index, exactnd_index, sweep1d_index, sampling_index>;

any_index load_any(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw error(error::not_an_index, "cannot open " + path);
    const index_header h = read_index_header(in);
    switch (h.kind) {
        case index_kind::exact1d:
            return load_index_payload<exact1d_index>(in);
        case index_kind::exactnd:
            return load_index_payload<exactnd_index>(in);
        case index_kind::sweep1d:
            return load_index_payload<sweep1d_index>(in);
        default:
            return load_index_payload<sampling_index>(in);
    }
}

// ---------------------------------------------------------------------------
// build

struct build_args {
    std::string input, output, type = "exact1d", kind = "shannon", table = "auto";
    double t = 0.5, alpha = 2.0, epsilon = 0.1;
    std::string alphas;
    std::size_t budget = 8'000'000;
    bool as_json = false;
};

int run_build(const build_args& a) {
    const auto ds = read_points_file(a.input);
    const std::vector<double> orders = a.alphas.empty() ? std::vector<double>{} : parse_list(a.alphas);
    const double t0 = now_us();
    json out;
    out["type"] = a.type;
    out["points"] = ds.points.size();
    out["dim"] = ds.points.dim();
    if (a.type == "exact1d") {
        const exact1d_index idx(ds.points, a.t, orders);
        save_index_file(a.output, idx);
        out["buckets"] = idx.num_buckets();
        out["table_entries"] = idx.table_entries();
    } else if (a.type == "exactnd") {
        const table_mode m = a.table == "eager" ? table_mode::eager : a.table == "scan" ? table_mode::scan : table_mode::automatic;
        const exactnd_index idx(ds.points, a.t, orders, {m, a.budget});
        save_index_file(a.output, idx);
        out["buckets"] = idx.num_buckets();
        out["table_mode"] = idx.eager() ? "eager" : "scan";
        out["table_entries"] = idx.table_entries();
    } else if (a.type == "sweep1d") {
        const sweep1d_index idx(ds.points, kind_from(a.kind, a.alpha), a.epsilon);
        save_index_file(a.output, idx);
        out["kind"] = idx.kind().name();
        out["epsilon"] = idx.epsilon();
        out["stored_nodes"] = idx.num_stored_nodes();
        out["stored_runs"] = idx.stored_runs();
    } else {
        const sampling_index idx(ds.points);
        save_index_file(a.output, idx);
        out["tree_footprint"] = idx.tree().footprint();
    }
    out["index"] = a.output;
    out["wall_time_us"] = std::llround(now_us() - t0);
    emit(out, a.as_json);
    return ok;
}

// ---------------------------------------------------------------------------
// query

struct query_args {
    std::string index, input, rect, kind = "shannon", mode;
    double alpha = 2.0, delta = 0.1, epsilon = 0.1;
    std::uint64_t seed = 1;
    bool as_json = false;
};

json interval_claim(const char* guarantee, double lo, double hi, bool high_probability) {
    json b;
    b["guarantee"] = guarantee;
    b["true_value_in"] = {std::max(0.0, lo), hi};
    b["high_probability"] = high_probability;
    return b;
}

int run_query(const query_args& a) {
    const entropy_kind k = kind_from(a.kind, a.alpha);
    const query_rect r = parse_rect(a.rect);
    json out = json::object();
    double value = 0;
    std::string mode = a.mode;
    json bounds;
    const double t0 = now_us();

    auto check_dim = [&](std::size_t d) {
        if (r.dim() != d)
            throw usage_error("rectangle has " + std::to_string(r.dim()) + " sides, data has " + std::to_string(d) +
                              " dimensions");
    };

    if (a.index.empty()) {
        if (a.input.empty()) throw usage_error("query needs --index or --input");
        if (!mode.empty() && mode != "exact") throw usage_error("--input answers by brute force; use --mode exact");
        const auto ds = read_points_file(a.input);
        check_dim(ds.points.dim());
        mode = "exact";
        value = oracle::brute_entropy(ds.points, r, k).value;
        bounds = interval_claim("exact", value, value, false);
    } else {
        const any_index idx = load_any(a.index);
        if (const auto* e1 = std::get_if<exact1d_index>(&idx)) {
            if (!mode.empty() && mode != "exact") throw usage_error("an exact1d index answers in --mode exact");
            check_dim(1);
            mode = "exact";
            value = e1->query(r, k).value;
            bounds = interval_claim("exact", value, value, false);
        } else if (const auto* en = std::get_if<exactnd_index>(&idx)) {
            if (!mode.empty() && mode != "exact") throw usage_error("an exactnd index answers in --mode exact");
            check_dim(en->dim());
            mode = "exact";
            value = en->query(r, k).value;
            bounds = interval_claim("exact", value, value, false);
        } else if (const auto* sw = std::get_if<sweep1d_index>(&idx)) {
            if (!mode.empty() && mode != "deterministic")
                throw usage_error("a sweep1d index answers in --mode deterministic");
            check_dim(1);
            if (sw->kind().alpha != k.alpha)
                throw error(error::order_not_indexed, "index was built for " + sw->kind().name());
            mode = "deterministic";
            value = sw->query(r).value;
            const double e = sw->epsilon();
            if (k.is_shannon())
                bounds = interval_claim("H <= h <= (1+eps)H + eps", (value - e) / (1 + e), value, false);
            else
                bounds = interval_claim("H <= h <= H + eps(alpha+1)/(alpha-1)", value - e * (k.alpha + 1) / (k.alpha - 1),
                                        value, false);
            bounds["epsilon"] = e;
        } else {
            const auto& si = std::get<sampling_index>(idx);
            check_dim(si.points().dim());
            if (mode.empty()) mode = "additive";
            rng_type rng(a.seed);
            const estimator_config cfg;
            estimate e;
            if (mode == "additive") {
                e = k.is_shannon() ? estimate_additive(si, r, a.delta, cfg, rng)
                                   : estimate_additive_renyi(si, r, k.alpha, a.delta, cfg, rng);
                bounds = interval_claim("|h - H| <= delta", e.summary.value - a.delta, e.summary.value + a.delta, true);
                bounds["delta"] = a.delta;
            } else if (mode == "multiplicative") {
                e = k.is_shannon() ? estimate_multiplicative(si, r, a.epsilon, cfg, rng)
                                   : estimate_multiplicative_renyi(si, r, k.alpha, a.epsilon, cfg, rng);
                bounds = interval_claim("H/(1+eps) <= h <= (1+eps)H", e.summary.value / (1 + a.epsilon),
                                        e.summary.value * (1 + a.epsilon), true);
                bounds["epsilon"] = a.epsilon;
            } else {
                throw usage_error("a sampling index answers in --mode additive or multiplicative");
            }
            value = e.summary.value;
            out["samples"] = e.samples;
            out["exact_fallback"] = e.fallback;
            out["heavy_color"] = e.heavy;
        }
    }
    json head;
    head["value"] = value;
    head["kind"] = k.name();
    head["mode"] = mode;
    head["bounds_claimed"] = bounds;
    head["seed"] = a.seed;
    head["wall_time_us"] = std::llround(now_us() - t0);
    head.update(out);
    emit(head, a.as_json);
    return ok;
}

// ---------------------------------------------------------------------------
// partition

struct partition_args {
    std::string input, algorithm = "dp", backend = "oracle", objective = "min";
    std::size_t k = 2;
    double epsilon = 0.1, delta = 0.1, t = 0.5;
    std::uint64_t seed = 1;
    bool as_json = false;
};

struct backend_holder {
    std::optional<exact1d_index> e1;
    std::optional<exactnd_index> en;
    std::optional<sampling_index> si;
    std::optional<rng_type> rng;
};

range_backend make_backend(const partition_args& a, const colored_point_set& pts, backend_holder& hold) {
    const entropy_kind sh = entropy_kind::shannon();
    if (a.backend == "oracle")
        return [&pts, sh](const query_rect& r) { return oracle::brute_entropy(pts, r, sh); };
    if (a.backend == "exact") {
        if (pts.dim() == 1) {
            hold.e1.emplace(pts, a.t);
            return [&hold, sh](const query_rect& r) { return hold.e1->query(r, sh); };
        }
        hold.en.emplace(pts, a.t);
        return [&hold, sh](const query_rect& r) { return hold.en->query(r, sh); };
    }
    if (a.backend == "estimate") {
        hold.si.emplace(pts);
        hold.rng.emplace(a.seed);
        const double delta = a.delta;
        return [&hold, delta](const query_rect& r) {
            if (!(hold.si->tree().range_weight(r) > 0)) return entropy_summary{entropy_kind::shannon(), 0.0, 0.0};
            estimate e = estimate_additive(*hold.si, r, delta, estimator_config{}, *hold.rng);
            return e.summary;
        };
    }
    throw usage_error("unknown backend " + a.backend);
}

json rect_json(const query_rect& r) {
    json sides = json::array();
    const double big = std::numeric_limits<double>::max();
    auto side = [&](double v) { return std::fabs(v) >= big ? json("*") : json(v); };
    for (std::size_t k = 0; k < r.dim(); ++k) sides.push_back({side(r.lo[k]), side(r.hi[k])});
    return sides;
}

int run_partition(const partition_args& a) {
    const auto ds = read_points_file(a.input);
    json out;
    const double t0 = now_us();
    out["algorithm"] = a.algorithm;
    out["backend"] = a.backend;
    out["k"] = a.k;
    backend_holder hold;
    if (a.algorithm == "greedy-tree") {
        const objective obj = a.objective == "max" ? objective::max : objective::min;
        const auto backend = make_backend(a, ds.points, hold);
        const tree_partition t = greedy_tree_split(ds.points, a.k, obj, backend);
        json buckets = json::array();
        double worst = 0, sum = 0;
        for (auto leaf : t.leaves()) {
            const auto& n = t.nodes[leaf];
            json b;
            b["rect"] = rect_json(n.rect);
            b["points"] = n.ids.size();
            b["score"] = n.score;
            buckets.push_back(b);
            worst = std::max(worst, n.score);
            sum += n.score;
        }
        out["objective"] = a.objective;
        out["buckets"] = buckets;
        out["max_score"] = worst;
        out["sum_score"] = sum;
    } else {
        if (ds.points.dim() != 1) throw error(error::dimension_mismatch, a.algorithm + " needs one-dimensional data");
        std::vector<std::uint32_t> order(ds.points.size());
        std::iota(order.begin(), order.end(), 0u);
        std::stable_sort(order.begin(), order.end(), [&](std::uint32_t x, std::uint32_t y) {
            return ds.points.coord(x, 0) < ds.points.coord(y, 0);
        });
        const colored_point_set ranked = rank_points(ds.points);
        const auto backend = make_backend(a, ranked, hold);
        const interval_error e(ranked.size(), ranked.total_weight(), backend);
        bucketing_1d b;
        if (a.algorithm == "dp")
            b = maxpart_dp(e, a.k);
        else if (a.algorithm == "maxpart-approx")
            b = maxpart_approx(e, a.k, a.epsilon);
        else if (a.algorithm == "sumpart")
            b = sumpart_approx(e, a.k, a.epsilon);
        else
            throw usage_error("unknown algorithm " + a.algorithm);
        json buckets = json::array();
        for (std::size_t i = 0; i < b.k; ++i) {
            json x;
            x["first_rank"] = b.cuts[i];
            x["last_rank"] = b.cuts[i + 1] - 1;
            x["lo"] = ds.points.coord(order[b.cuts[i]], 0);
            x["hi"] = ds.points.coord(order[b.cuts[i + 1] - 1], 0);
            x["score"] = b.scores[i];
            buckets.push_back(x);
        }
        out["cuts"] = b.cuts;
        out["buckets"] = buckets;
        out["value"] = b.value;
        out["evaluations"] = b.evaluations;
    }
    out["seed"] = a.seed;
    out["wall_time_us"] = std::llround(now_us() - t0);
    emit(out, a.as_json);
    return ok;
}

// ---------------------------------------------------------------------------
// bench

struct bench_args {
    std::string sizes = "1000,10000", ts = "0.25,0.5,0.75", output;
    std::size_t dim = 1, queries = 1000;
    std::uint32_t colors = 64;
    double epsilon = 0.2;
    std::uint64_t seed = 1;
};

struct percentiles {
    double p50 = 0, p90 = 0, p99 = 0;
};

percentiles summarize(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    auto at = [&](double q) { return v.empty() ? 0.0 : v[std::min(v.size() - 1, std::size_t(q * double(v.size())))]; };
    return {at(0.5), at(0.9), at(0.99)};
}

int run_bench(const bench_args& a) {
    std::ofstream file;
    if (!a.output.empty()) {
        file.open(a.output);
        if (!file) throw error(error::data_error, "cannot write " + a.output);
    }
    std::ostream& out = a.output.empty() ? std::cout : file;
    out << "structure,n,d,t,build_ms,space,p50_us,p90_us,p99_us,oracle_p50_us\n";
    const entropy_kind sh = entropy_kind::shannon();
    for (double nd : parse_list(a.sizes)) {
        const std::size_t n = std::size_t(nd);
        std::mt19937_64 rng(a.seed + n);
        std::uniform_real_distribution<double> u(0, 1);
        std::uniform_int_distribution<std::uint32_t> c(0, a.colors - 1);
        std::vector<point> pts;
        for (std::size_t i = 0; i < n; ++i) {
            point p;
            for (std::size_t k = 0; k < a.dim; ++k) p.coords.push_back(u(rng));
            p.color = c(rng);
            pts.push_back(p);
        }
        const colored_point_set set(a.dim, pts);
        std::vector<query_rect> qs;
        for (std::size_t q = 0; q < a.queries; ++q) {
            query_rect r;
            for (std::size_t k = 0; k < a.dim; ++k) {
                double x = u(rng), y = u(rng);
                if (x > y) std::swap(x, y);
                r.lo.push_back(x);
                r.hi.push_back(y);
            }
            qs.push_back(r);
        }
        auto time_queries = [&](auto&& ask) {
            std::vector<double> lat;
            double sink = 0;
            for (const auto& r : qs) {
                const double s = now_us();
                sink += ask(r);
                lat.push_back(now_us() - s);
            }
            if (sink < 0) std::cerr << sink;
            return summarize(lat);
        };
        const percentiles base = time_queries([&](const query_rect& r) { return oracle::brute_entropy(set, r, sh).value; });
        auto row = [&](const std::string& name, const std::string& t, double build_ms, std::size_t space, percentiles p) {
            out << name << ',' << n << ',' << a.dim << ',' << t << ',' << build_ms << ',' << space << ',' << p.p50 << ','
                << p.p90 << ',' << p.p99 << ',' << base.p50 << '\n';
        };
        row("oracle", "", 0, n, base);
        for (double t : parse_list(a.ts)) {
            std::ostringstream tss;
            tss << t;
            const std::string ts = tss.str();
            double s = now_us();
            if (a.dim == 1) {
                const exact1d_index idx(set, t);
                const double build = (now_us() - s) / 1e3;
                row("exact1d", ts, build, idx.table_entries(),
                    time_queries([&](const query_rect& r) { return idx.query(r, sh).value; }));
            }
            s = now_us();
            const exactnd_index idx(set, t);
            const double build = (now_us() - s) / 1e3;
            row(idx.eager() ? "exactnd-eager" : "exactnd-scan", ts, build, idx.table_entries(),
                time_queries([&](const query_rect& r) { return idx.query(r, sh).value; }));
        }
        if (a.dim == 1) {
            const double s = now_us();
            const sweep1d_index idx(set, sh, a.epsilon);
            const double build = (now_us() - s) / 1e3;
            row("sweep1d", "", build, idx.stored_runs(), time_queries([&](const query_rect& r) { return idx.query(r).value; }));
        }
    }
    return ok;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Range entropy queries over colored points"};
    app.require_subcommand(1);

    build_args ba;
    auto* build = app.add_subcommand("build", "Build an index from a CSV/TSV file and save it");
    build->add_option("--input,-i", ba.input, "Point file with columns x1..xd, color[, weight]")->required();
    build->add_option("--index,-o", ba.output, "Index file to write")->required();
    build->add_option("--type", ba.type, "Index type")
        ->check(CLI::IsMember({"exact1d", "exactnd", "sweep1d", "sampling"}));
    build->add_option("--t", ba.t, "Bucket exponent in [0, 1] for exact indexes");
    build->add_option("--alphas", ba.alphas, "Comma-separated Renyi orders to tabulate (exact indexes)");
    build->add_option("--kind", ba.kind, "Entropy kind for sweep1d")->check(CLI::IsMember({"shannon", "renyi"}));
    build->add_option("--alpha", ba.alpha, "Renyi order for sweep1d");
    build->add_option("--epsilon", ba.epsilon, "Accuracy of sweep1d");
    build->add_option("--table", ba.table, "exactnd table mode")->check(CLI::IsMember({"auto", "eager", "scan"}));
    build->add_option("--budget", ba.budget, "exactnd entry budget for automatic mode");
    build->add_flag("--json", ba.as_json, "Print JSON");

    query_args qa;
    auto* query = app.add_subcommand("query", "Answer one range entropy query");
    query->add_option("--index", qa.index, "Index file");
    query->add_option("--input", qa.input, "Point file, answered by brute force");
    query->add_option("--rect", qa.rect, "Rectangle lo1:hi1,lo2:hi2,... with * for an open side")->required();
    query->add_option("--kind", qa.kind, "Entropy kind")->check(CLI::IsMember({"shannon", "renyi"}));
    query->add_option("--alpha", qa.alpha, "Renyi order");
    query->add_option("--mode", qa.mode, "Answer mode")
        ->check(CLI::IsMember({"exact", "additive", "multiplicative", "deterministic"}));
    query->add_option("--delta", qa.delta, "Additive accuracy");
    query->add_option("--epsilon", qa.epsilon, "Multiplicative accuracy");
    query->add_option("--seed", qa.seed, "Random seed");
    query->add_flag("--json", qa.as_json, "Print JSON");

    partition_args pa;
    auto* part = app.add_subcommand("partition", "Partition points into k low-entropy buckets");
    part->add_option("--input,-i", pa.input, "Point file")->required();
    part->add_option("--k", pa.k, "Number of buckets")->required();
    part->add_option("--algorithm", pa.algorithm, "Partitioner")
        ->check(CLI::IsMember({"dp", "maxpart-approx", "sumpart", "greedy-tree"}));
    part->add_option("--backend", pa.backend, "Range entropy backend")
        ->check(CLI::IsMember({"oracle", "exact", "estimate"}));
    part->add_option("--epsilon", pa.epsilon, "Approximation factor of the partitioner");
    part->add_option("--delta", pa.delta, "Additive accuracy of the estimate backend");
    part->add_option("--t", pa.t, "Bucket exponent of the exact backend");
    part->add_option("--objective", pa.objective, "Leaf choice of greedy-tree")->check(CLI::IsMember({"min", "max"}));
    part->add_option("--seed", pa.seed, "Random seed of the estimate backend");
    part->add_flag("--json", pa.as_json, "Print JSON");

    bench_args bna;
    auto* bench = app.add_subcommand("bench", "Time builds and queries on synthetic data; prints CSV");
    bench->add_option("--n", bna.sizes, "Comma-separated point counts");
    bench->add_option("--t", bna.ts, "Comma-separated bucket exponents");
    bench->add_option("--dim", bna.dim, "Dimension")->check(CLI::Range(1, 8));
    bench->add_option("--queries", bna.queries, "Queries per structure");
    bench->add_option("--colors", bna.colors, "Number of colors")->check(CLI::Range(1u, 1u << 30));
    bench->add_option("--epsilon", bna.epsilon, "sweep1d accuracy");
    bench->add_option("--seed", bna.seed, "Random seed");
    bench->add_option("--output,-o", bna.output, "CSV file instead of stdout");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? ok : usage;
    }

    try {
        if (*build) return run_build(ba);
        if (*query) return run_query(qa);
        if (*part) return run_partition(pa);
        return run_bench(bna);
    } catch (const usage_error& e) {
        std::cerr << "rqe: " << e.what() << "\n";
        return usage;
    } catch (const error& e) {
        std::cerr << "rqe: " << e.what() << "\n";
        return exit_for(e);
    } catch (const std::exception& e) {
        std::cerr << "rqe: " << e.what() << "\n";
        return data;
    }
}
