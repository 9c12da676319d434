#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <optional>
#include <vector>

#include "rqe/core.hpp"
#include "rqe/exact1d.hpp"
#include "rqe/rangetree.hpp"

namespace rqe {

enum class table_mode {
    automatic,  ///< eager when the projected table fits the entry budget
    eager,      ///< tabulate every snapped rectangle of every bucket
    scan        ///< derive the bucket summary from its points at query time
};

struct exactnd_options {
    table_mode mode = table_mode::automatic;
    std::size_t entry_budget = 8'000'000;
};

/// Exact range entropy in d dimensions. Points are ordered by color and cut into
/// buckets of at most ceil(n^t) points, so neighbouring buckets share at most one
/// color. Each bucket knows the entropy, count and extreme colors of every
/// rectangle whose faces rest on its own coordinates; a query visits every
/// bucket and stitches the per-bucket answers, correcting the one color that
/// may continue from the previous buckets.
class exactnd_index {
public:
    /// Stored facts about the points of one bucket inside one rectangle.
    struct bucket_entry {
        double count = 0;
        std::uint32_t u_plus = 0, u_minus = 0;  ///< smallest / largest global color
        double n_plus = 0, n_minus = 0;
    };

    exactnd_index() = default;

    exactnd_index(const colored_point_set& pts, double t, const std::vector<double>& alphas = {},
                  exactnd_options opts = {})
        : t_(t), d_(pts.dim()), kinds_(detail::make_kinds(alphas)) {
        if (!(t >= 0 && t <= 1)) throw error(error::invalid_argument, "t must lie in [0, 1]");
        const std::size_t n = pts.size();
        std::vector<std::uint32_t> order(n);
        std::iota(order.begin(), order.end(), 0u);
        std::sort(order.begin(), order.end(), [&](std::uint32_t a, std::uint32_t b) {
            if (pts.color(a) != pts.color(b)) return pts.color(a) < pts.color(b);
            for (std::size_t k = 0; k < d_; ++k)
                if (pts.coord(a, k) != pts.coord(b, k)) return pts.coord(a, k) < pts.coord(b, k);
            return a < b;
        });
        s_ = detail::ceil_pow(n, t);
        for (std::size_t lo = 0; lo < n; lo += s_) {
            bucket b;
            const std::size_t hi = std::min(n, lo + s_);
            for (std::size_t p = lo; p < hi; ++p) {
                const std::uint32_t id = order[p];
                for (std::size_t k = 0; k < d_; ++k) b.coords.push_back(pts.coord(id, k));
                b.colors.push_back(pts.color(id));
                b.weights.push_back(pts.weight(id));
            }
            buckets_.push_back(std::move(b));
        }
        for (auto& b : buckets_) prepare(b);

        std::size_t projected = 0;
        for (const auto& b : buckets_) projected += b.keys;
        eager_ = opts.mode == table_mode::eager || (opts.mode == table_mode::automatic && projected <= opts.entry_budget);
        if (eager_)
            for (auto& b : buckets_) tabulate(b);
    }

    std::size_t size() const noexcept {
        std::size_t s = 0;
        for (const auto& b : buckets_) s += b.colors.size();
        return s;
    }
    std::size_t dim() const noexcept { return d_; }
    double t() const noexcept { return t_; }
    std::size_t bucket_size() const noexcept { return s_; }
    std::size_t num_buckets() const noexcept { return buckets_.size(); }
    bool eager() const noexcept { return eager_; }
    const std::vector<entropy_kind>& kinds() const noexcept { return kinds_; }

    std::size_t table_entries() const noexcept {
        std::size_t s = 0;
        if (eager_)
            for (const auto& b : buckets_) s += b.keys;
        return s;
    }

    /// Distinct colors of bucket i in ascending order.
    const std::vector<color_id>& bucket_colors(std::size_t i) const { return buckets_[i].local_colors; }

    /// The rectangle obtained by pulling every face of `r` inward onto the nearest
    /// coordinate of bucket i, or nothing when no bucket point can lie in `r`.
    std::optional<query_rect> snapped_rect(std::size_t i, const query_rect& r) const {
        const bucket& b = buckets_[i];
        std::vector<std::uint32_t> lo, hi;
        if (!snap(b, r, lo, hi)) return std::nullopt;
        query_rect out{std::vector<double>(d_), std::vector<double>(d_)};
        for (std::size_t k = 0; k < d_; ++k) {
            out.lo[k] = b.grid[k][lo[k]];
            out.hi[k] = b.grid[k][hi[k]];
        }
        return out;
    }

    /// Summary of bucket i inside `r`, from the table when eager, else by scanning.
    entropy_summary bucket_summary(std::size_t i, const query_rect& r, entropy_kind k) const {
        const std::size_t slot = detail::kind_slot(kinds_, k);
        bucket_entry e;
        double v = 0;
        lookup(buckets_[i], r, slot, e, v);
        return {k, e.count, v};
    }

    entropy_summary query(const query_rect& r, entropy_kind k, query_stats* stats = nullptr) const {
        if (r.dim() != d_) throw error(error::dimension_mismatch, "query dimension differs from index dimension");
        const std::size_t slot = detail::kind_slot(kinds_, k);
        entropy_summary acc{k, 0.0, 0.0};
        std::uint32_t last_color = 0;
        double last_count = 0;
        for (const bucket& b : buckets_) {
            if (stats) ++stats->buckets_visited;
            bucket_entry e;
            double v = 0;
            if (!lookup(b, r, slot, e, v)) continue;
            if (stats) {
                if (eager_)
                    ++stats->table_lookups;
                else
                    stats->fringe_points += b.colors.size();
            }
            entropy_summary part{k, e.count, v};
            if (acc.count > 0 && last_color == e.u_plus) {
                acc = replace_color(acc, last_count, last_count + e.n_plus, k);
                part = e.n_plus >= e.count ? entropy_summary{k, 0.0, 0.0} : delete_color(part, e.n_plus, k);
                acc = merge(acc, part, k);
                if (e.u_minus == e.u_plus) {
                    last_count += e.n_plus;
                } else {
                    last_color = e.u_minus;
                    last_count = e.n_minus;
                }
            } else {
                acc = merge(acc, part, k);
                last_color = e.u_minus;
                last_count = e.n_minus;
            }
        }
        acc.kind = k;
        return acc;
    }

    template <class Archive>
    void save(Archive& ar) const {
        std::vector<double> alphas;
        for (const auto& k : kinds_) alphas.push_back(k.alpha);
        ar(t_, d_, s_, eager_, alphas, std::uint64_t(buckets_.size()));
        for (const auto& b : buckets_) ar(b.coords, b.colors, b.weights, b.count, b.u_plus, b.u_minus, b.n_plus, b.n_minus, b.values);
    }

    template <class Archive>
    void load(Archive& ar) {
        std::vector<double> alphas;
        std::uint64_t nb = 0;
        ar(t_, d_, s_, eager_, alphas, nb);
        kinds_.clear();
        for (double a : alphas) kinds_.push_back(entropy_kind{a});
        buckets_.assign(nb, bucket{});
        for (auto& b : buckets_) {
            ar(b.coords, b.colors, b.weights, b.count, b.u_plus, b.u_minus, b.n_plus, b.n_minus, b.values);
            prepare(b);
        }
    }

private:
    struct bucket {
        std::vector<double> coords;  ///< row-major, d per point
        std::vector<color_id> colors;
        std::vector<double> weights;
        std::vector<color_id> local_colors;
        std::vector<std::uint32_t> local;             ///< local color per point
        std::vector<std::vector<double>> grid;        ///< distinct coordinates per dimension
        std::vector<std::vector<std::uint32_t>> rank;  ///< per dimension, rank of each point
        std::vector<std::size_t> stride;              ///< mixed radix over per-dimension pair index
        std::size_t keys = 0;
        // eager table, one slot per key
        std::vector<double> count, n_plus, n_minus;
        std::vector<std::uint32_t> u_plus, u_minus;    ///< local color ids
        std::vector<double> values;                    ///< key-major, kinds_.size() per key
    };

    static std::size_t pair_index(std::size_t lo, std::size_t hi, std::size_t b) noexcept {
        return lo * b - lo * (lo - 1) / 2 + (hi - lo);
    }

    void prepare(bucket& b) const {
        const std::size_t m = b.colors.size();
        b.local_colors = b.colors;
        b.local_colors.erase(std::unique(b.local_colors.begin(), b.local_colors.end()), b.local_colors.end());
        b.local.resize(m);
        for (std::size_t p = 0; p < m; ++p)
            b.local[p] = static_cast<std::uint32_t>(
                std::lower_bound(b.local_colors.begin(), b.local_colors.end(), b.colors[p]) - b.local_colors.begin());
        b.grid.assign(d_, {});
        b.rank.assign(d_, std::vector<std::uint32_t>(m));
        b.stride.assign(d_, 1);
        for (std::size_t k = 0; k < d_; ++k) {
            auto& g = b.grid[k];
            for (std::size_t p = 0; p < m; ++p) g.push_back(b.coords[p * d_ + k]);
            std::sort(g.begin(), g.end());
            g.erase(std::unique(g.begin(), g.end()), g.end());
            for (std::size_t p = 0; p < m; ++p)
                b.rank[k][p] = static_cast<std::uint32_t>(std::lower_bound(g.begin(), g.end(), b.coords[p * d_ + k]) - g.begin());
        }
        b.keys = m == 0 ? 0 : 1;
        for (std::size_t k = d_; k-- > 0;) {
            b.stride[k] = b.keys;
            const std::size_t g = b.grid[k].size();
            b.keys *= g * (g + 1) / 2;
        }
    }

    bool snap(const bucket& b, const query_rect& r, std::vector<std::uint32_t>& lo, std::vector<std::uint32_t>& hi) const {
        if (b.colors.empty()) return false;
        lo.resize(d_);
        hi.resize(d_);
        for (std::size_t k = 0; k < d_; ++k) {
            const auto& g = b.grid[k];
            const auto l = std::lower_bound(g.begin(), g.end(), r.lo[k]) - g.begin();
            const auto h = std::upper_bound(g.begin(), g.end(), r.hi[k]) - g.begin();
            if (l >= h) return false;
            lo[k] = static_cast<std::uint32_t>(l);
            hi[k] = static_cast<std::uint32_t>(h - 1);
        }
        return true;
    }

    std::size_t key_of(const bucket& b, const std::vector<std::uint32_t>& lo, const std::vector<std::uint32_t>& hi) const {
        std::size_t key = 0;
        for (std::size_t k = 0; k < d_; ++k) key += pair_index(lo[k], hi[k], b.grid[k].size()) * b.stride[k];
        return key;
    }

    bool lookup(const bucket& b, const query_rect& r, std::size_t slot, bucket_entry& e, double& value) const {
        std::vector<std::uint32_t> lo, hi;
        if (!snap(b, r, lo, hi)) return false;
        if (eager_) {
            const std::size_t key = key_of(b, lo, hi);
            if (b.count[key] <= 0) return false;
            e.count = b.count[key];
            e.u_plus = b.local_colors[b.u_plus[key]];
            e.u_minus = b.local_colors[b.u_minus[key]];
            e.n_plus = b.n_plus[key];
            e.n_minus = b.n_minus[key];
            value = b.values[key * kinds_.size() + slot];
            return true;
        }
        // Scan: the bucket's histogram inside the snapped box, colors already ascending.
        std::vector<double> cnt(b.local_colors.size(), 0.0);
        for (std::size_t p = 0; p < b.colors.size(); ++p) {
            bool in = true;
            for (std::size_t k = 0; k < d_ && in; ++k) in = b.rank[k][p] >= lo[k] && b.rank[k][p] <= hi[k];
            if (in) cnt[b.local[p]] += b.weights[p];
        }
        color_histogram h;
        std::size_t first = cnt.size(), last = 0;
        for (std::size_t c = 0; c < cnt.size(); ++c) {
            if (cnt[c] <= 0) continue;
            h.add(b.local_colors[c], cnt[c]);
            if (first == cnt.size()) first = c;
            last = c;
        }
        if (h.empty()) return false;
        e.count = h.total();
        e.u_plus = b.local_colors[first];
        e.u_minus = b.local_colors[last];
        e.n_plus = cnt[first];
        e.n_minus = cnt[last];
        value = entropy(h, kinds_[slot]).value;
        return true;
    }

    // Fills the table of one bucket. Ranges of the leading d-1 dimensions are
    // enumerated explicitly; along the last dimension each lower face is fixed and
    // the upper face advances, adding the points of one coordinate at a time.
    void tabulate(bucket& b) const {
        const std::size_t nk = kinds_.size();
        b.count.assign(b.keys, 0.0);
        b.n_plus.assign(b.keys, 0.0);
        b.n_minus.assign(b.keys, 0.0);
        b.u_plus.assign(b.keys, 0);
        b.u_minus.assign(b.keys, 0);
        b.values.assign(b.keys * nk, 0.0);
        if (b.keys == 0) return;
        std::vector<std::uint32_t> all(b.colors.size());
        std::iota(all.begin(), all.end(), 0u);
        std::vector<double> cnt(b.local_colors.size(), 0.0);
        std::vector<entropy_summary> run(nk);
        prefix_ranges(b, 0, 0, all, cnt, run);
    }

    void prefix_ranges(bucket& b, std::size_t k, std::size_t key_base, const std::vector<std::uint32_t>& inside,
                       std::vector<double>& cnt, std::vector<entropy_summary>& run) const {
        const std::size_t g = b.grid[k].size();
        if (k + 1 < d_) {
            std::vector<std::uint32_t> sub;
            for (std::size_t lo = 0; lo < g; ++lo) {
                for (std::size_t hi = lo; hi < g; ++hi) {
                    sub.clear();
                    for (auto p : inside)
                        if (b.rank[k][p] >= lo && b.rank[k][p] <= hi) sub.push_back(p);
                    prefix_ranges(b, k + 1, key_base + pair_index(lo, hi, g) * b.stride[k], sub, cnt, run);
                }
            }
            return;
        }
        // Last dimension: sort the surviving points by rank, then sweep.
        std::vector<std::uint32_t> pts = inside;
        std::sort(pts.begin(), pts.end(), [&](std::uint32_t x, std::uint32_t y) { return b.rank[k][x] < b.rank[k][y]; });
        const std::size_t nk = kinds_.size();
        std::size_t start = 0;
        for (std::size_t lo = 0; lo < g; ++lo) {
            while (start < pts.size() && b.rank[k][pts[start]] < lo) ++start;
            for (std::size_t s = 0; s < nk; ++s) run[s] = {kinds_[s], 0.0, 0.0};
            std::size_t q = start;
            std::uint32_t umin = std::numeric_limits<std::uint32_t>::max(), umax = 0;
            for (std::size_t hi = lo; hi < g; ++hi) {
                for (; q < pts.size() && b.rank[k][pts[q]] == hi; ++q) {
                    const std::uint32_t p = pts[q];
                    const double w = b.weights[p];
                    if (w <= 0) continue;
                    const std::uint32_t c = b.local[p];
                    const double old = cnt[c];
                    cnt[c] = old + w;
                    for (std::size_t s = 0; s < nk; ++s)
                        run[s] = old > 0 ? replace_color(run[s], old, old + w, kinds_[s]) : insert_color(run[s], w, kinds_[s]);
                    umin = std::min(umin, c);
                    umax = std::max(umax, c);
                }
                const std::size_t key = key_base + pair_index(lo, hi, g);
                b.count[key] = run[0].count;
                if (run[0].count > 0) {
                    b.u_plus[key] = umin;
                    b.u_minus[key] = umax;
                    b.n_plus[key] = cnt[umin];
                    b.n_minus[key] = cnt[umax];
                }
                for (std::size_t s = 0; s < nk; ++s) b.values[key * nk + s] = run[s].value;
            }
            for (std::size_t r = start; r < q; ++r) cnt[b.local[pts[r]]] = 0;
        }
    }

    double t_ = 0.5;
    std::size_t d_ = 1;
    std::size_t s_ = 1;
    bool eager_ = false;
    std::vector<entropy_kind> kinds_;
    std::vector<bucket> buckets_;
};

}  // namespace rqe
