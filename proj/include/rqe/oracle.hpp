#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <vector>

#include "rqe/core.hpp"
#include "rqe/rangetree.hpp"

namespace rqe::oracle {

inline color_histogram brute_histogram(const colored_point_set& pts, const query_rect& r) {
    color_histogram h;
    if (r.dim() != pts.dim()) throw error(error::dimension_mismatch, "query dimension differs from data dimension");
    for (std::size_t i = 0; i < pts.size(); ++i)
        if (r.contains(pts.coords(i))) h.add(pts.color(i), pts.weight(i));
    return h;
}

/// Linear-scan range entropy; the reference for every index.
inline entropy_summary brute_entropy(const colored_point_set& pts, const query_rect& r, entropy_kind k) {
    return entropy(brute_histogram(pts, r), k);
}

// ---------------------------------------------------------------------------
// Boolean matrix product gadget.

using bool_matrix = std::vector<std::vector<std::uint8_t>>;

struct matrix_gadget {
    std::size_t side = 0;  ///< sqrt(n)
    colored_point_set points;
    /// query interval per (i, j), row-major, zero-based indices
    std::vector<query_rect> queries;
    std::vector<double> predicted_shannon;
    /// t and |P1| + |P2| per entry, enough to evaluate the Renyi prediction for any order
    std::vector<std::size_t> blocks, fringe;

    const query_rect& query(std::size_t i, std::size_t j) const { return queries[i * side + j]; }

    double predicted(std::size_t i, std::size_t j, entropy_kind k) const {
        const std::size_t e = i * side + j;
        return k.is_shannon() ? predicted_shannon[e] : predicted_renyi(blocks[e], fringe[e], k.alpha);
    }

    double predicted_renyi(std::size_t t, std::size_t f, double alpha) const {
        const double s = double(side);
        const double n = double(t) * s + double(f);
        const double rest = s - double(f);
        const double denom = double(f) * std::pow(double(t + 1), alpha) + (t > 0 ? rest * std::pow(double(t), alpha) : 0.0);
        return renyi_from_power_sum(n, denom, alpha);
    }
};

inline bool_matrix boolean_product(const bool_matrix& a, const bool_matrix& b) {
    const std::size_t s = a.size();
    bool_matrix c(s, std::vector<std::uint8_t>(s, 0));
    for (std::size_t i = 0; i < s; ++i)
        for (std::size_t k = 0; k < s; ++k)
            if (a[i][k])
                for (std::size_t j = 0; j < s; ++j) c[i][j] |= b[k][j];
    return c;
}

/// Points 1..2n on a line. Block A_i lists the colors k with A[i][k] = 0 first,
/// block B_j lists the colors k with B[k][j] = 1 first; every color appears once
/// per block.
inline matrix_gadget build_matrix_gadget(const bool_matrix& a, const bool_matrix& b) {
    const std::size_t s = a.size();
    if (b.size() != s) throw error(error::dimension_mismatch, "matrices must share their side length");
    const std::size_t n = s * s;
    matrix_gadget g;
    g.side = s;
    std::vector<double> xs;
    std::vector<color_id> cs;
    xs.reserve(2 * n);
    cs.reserve(2 * n);
    std::vector<std::size_t> zeros(s), ones(s);
    for (std::size_t i = 0; i < s; ++i) {
        for (std::size_t pass = 0; pass < 2; ++pass)
            for (std::size_t k = 0; k < s; ++k)
                if ((a[i][k] != 0) == (pass == 1)) {
                    cs.push_back(color_id(k));
                    xs.push_back(double(xs.size() + 1));
                    if (pass == 0) ++zeros[i];
                }
    }
    for (std::size_t j = 0; j < s; ++j) {
        for (std::size_t pass = 0; pass < 2; ++pass)
            for (std::size_t k = 0; k < s; ++k)
                if ((b[k][j] != 0) == (pass == 0)) {
                    cs.push_back(color_id(k));
                    xs.push_back(double(xs.size() + 1));
                    if (pass == 0) ++ones[j];
                }
    }
    g.points = colored_point_set(1, std::move(xs), std::move(cs), std::vector<double>(2 * n, 1.0));
    for (std::size_t i = 0; i < s; ++i) {
        for (std::size_t j = 0; j < s; ++j) {
            const double lo = double(i * s + zeros[i] + 1);
            const double hi = double(n + j * s + ones[j]);
            g.queries.push_back(query_rect::interval(lo, hi));
            const std::size_t t = (s - (i + 1)) + j;
            const std::size_t p = (s - zeros[i]) + ones[j];
            g.blocks.push_back(t);
            g.fringe.push_back(p);
            const double tot = double(t * s + p);
            const double rest = double(s) - double(p);
            double h = 0;
            if (tot > 0) {
                h += double(p) * (double(t + 1) / tot) * std::log2(tot / double(t + 1));
                if (t > 0) h += rest * (double(t) / tot) * std::log2(tot / double(t));
            }
            g.predicted_shannon.push_back(h);
        }
    }
    return g;
}

// ---------------------------------------------------------------------------
// Set intersection gadget.

struct set_gadget {
    colored_point_set points;
    std::size_t families = 0;
    std::vector<query_rect> queries;  ///< row-major over (i, j)
    std::vector<double> sizes;        ///< |P_i| + |P'_j| per pair

    const query_rect& query(std::size_t i, std::size_t j) const { return queries[i * families + j]; }
};

/// Two parallel lines y = x + n and y = x - n; set S_i contributes its items to
/// the upper-left line at x = -(k + n_{i-1}) and to the lower-right line at
/// x = k + n_{i-1}, both carrying the item's color.
inline set_gadget build_set_intersection_gadget(const std::vector<std::vector<std::uint32_t>>& sets) {
    std::size_t n = 0;
    std::uint32_t universe = 0;
    for (const auto& s : sets) {
        n += s.size();
        for (auto v : s) universe = std::max(universe, v + 1);
    }
    std::vector<color_id> remap(universe, std::numeric_limits<color_id>::max());
    color_id next = 0;
    for (const auto& s : sets)
        for (auto v : s)
            if (remap[v] == std::numeric_limits<color_id>::max()) remap[v] = next++;

    set_gadget g;
    g.families = sets.size();
    std::vector<std::size_t> prefix(sets.size() + 1, 0);
    for (std::size_t i = 0; i < sets.size(); ++i) prefix[i + 1] = prefix[i] + sets[i].size();
    std::vector<point> pts;
    pts.reserve(2 * n);
    const double nn = double(n);
    for (std::size_t i = 0; i < sets.size(); ++i) {
        for (std::size_t k = 0; k < sets[i].size(); ++k) {
            const double off = double(k + 1 + prefix[i]);
            const color_id c = remap[sets[i][k]];
            pts.push_back({{-off, -off + nn}, c, 1.0});
            pts.push_back({{off, off - nn}, c, 1.0});
        }
    }
    g.points = colored_point_set(2, pts);
    for (std::size_t i = 0; i < sets.size(); ++i) {
        for (std::size_t j = 0; j < sets.size(); ++j) {
            query_rect r{{-double(prefix[i + 1]), double(prefix[j]) + 1 - nn},
                         {double(prefix[j + 1]), nn - double(prefix[i]) - 1}};
            g.queries.push_back(r);
            g.sizes.push_back(double(sets[i].size() + sets[j].size()));
        }
    }
    return g;
}

// ---------------------------------------------------------------------------
// Exhaustive partitioning over a color sequence (position = coordinate).

struct exhaustive_result {
    double value = std::numeric_limits<double>::infinity();
    std::vector<std::size_t> cuts;  ///< c_0 = 0 < ... < c_k = n
};

inline double sequence_expected_entropy(const std::vector<color_id>& seq, std::size_t a, std::size_t b) {
    color_histogram h;
    for (std::size_t i = a; i < b; ++i) h.add(seq[i], 1.0);
    return expected_entropy(shannon_entropy(h), double(seq.size()));
}

/// Enumerates every way to cut `seq` into k nonempty buckets; `combine` folds the
/// per-bucket expected entropies (max for MaxPart, sum for SumPart).
inline exhaustive_result exhaustive_partition(const std::vector<color_id>& seq, std::size_t k,
                                              const std::function<double(double, double)>& combine) {
    const std::size_t n = seq.size();
    if (k == 0 || k > n) throw error(error::too_many_buckets, "bucket count must lie in [1, n]");
    exhaustive_result best;
    std::vector<std::size_t> cuts(k + 1);
    cuts[0] = 0;
    cuts[k] = n;
    std::function<void(std::size_t)> rec = [&](std::size_t j) {
        if (j == k) {
            double v = 0;
            for (std::size_t b = 0; b < k; ++b) v = combine(v, sequence_expected_entropy(seq, cuts[b], cuts[b + 1]));
            if (v < best.value - 1e-12) {
                best.value = v;
                best.cuts = cuts;
            }
            return;
        }
        for (std::size_t c = cuts[j - 1] + 1; c + (k - j) <= n; ++c) {
            cuts[j] = c;
            rec(j + 1);
        }
    };
    if (k == 1) {
        best.value = sequence_expected_entropy(seq, 0, n);
        best.cuts = {0, n};
        return best;
    }
    rec(1);
    return best;
}

inline exhaustive_result exhaustive_maxpart(const std::vector<color_id>& seq, std::size_t k) {
    return exhaustive_partition(seq, k, [](double a, double b) { return std::max(a, b); });
}

inline exhaustive_result exhaustive_sumpart(const std::vector<color_id>& seq, std::size_t k) {
    return exhaustive_partition(seq, k, [](double a, double b) { return a + b; });
}

}  // namespace rqe::oracle
