#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <memory>
#include <numeric>
#include <utility>
#include <vector>

#include "rqe/core.hpp"
#include "rqe/rangetree.hpp"

namespace rqe {

/// Per-query diagnostics shared by the exact indexes.
struct query_stats {
    std::size_t fringe_points = 0;   ///< points handled one by one outside the precomputed part
    std::size_t table_lookups = 0;
    std::size_t buckets_visited = 0;
};

enum class build_strategy { incremental, naive };

namespace detail {

/// Index of `k` inside `kinds`, or OrderNotIndexed.
inline std::size_t kind_slot(const std::vector<entropy_kind>& kinds, entropy_kind k) {
    for (std::size_t i = 0; i < kinds.size(); ++i)
        if (kinds[i] == k) return i;
    throw error(error::order_not_indexed, "entropy order was not precomputed by this index");
}

inline std::vector<entropy_kind> make_kinds(const std::vector<double>& alphas) {
    std::vector<entropy_kind> kinds{entropy_kind::shannon()};
    for (double a : alphas) {
        entropy_kind k = entropy_kind::renyi(a);
        if (std::find(kinds.begin(), kinds.end(), k) == kinds.end()) kinds.push_back(k);
    }
    return kinds;
}

inline std::size_t ceil_pow(std::size_t n, double t) {
    if (n == 0) return 1;
    const double v = std::ceil(std::pow(double(n), t) - 1e-9);
    return std::max<std::size_t>(1, static_cast<std::size_t>(v));
}

}  // namespace detail

/// Exact range entropy on the line. Points are cut into buckets of at most
/// ceil(n^t) consecutive points; the entropy of every run of whole buckets is
/// tabulated, and a query patches the largest covered run with the leftover
/// points at both ends.
class exact1d_index {
public:
    exact1d_index() = default;

    exact1d_index(const colored_point_set& pts, double t, const std::vector<double>& alphas = {},
                  build_strategy strategy = build_strategy::incremental)
        : t_(t), kinds_(detail::make_kinds(alphas)) {
        if (pts.dim() != 1) throw error(error::dimension_mismatch, "exact1d needs one-dimensional points");
        if (!(t >= 0 && t <= 1)) throw error(error::invalid_argument, "t must lie in [0, 1]");
        load_points(pts);
        if (strategy == build_strategy::incremental)
            build_incremental();
        else
            build_naive();
    }

    std::size_t size() const noexcept { return xs_.size(); }
    double t() const noexcept { return t_; }
    std::size_t bucket_size() const noexcept { return s_; }
    std::size_t num_buckets() const noexcept { return k_; }
    std::size_t table_entries() const noexcept { return counts_.size(); }
    const std::vector<entropy_kind>& kinds() const noexcept { return kinds_; }

    /// Coordinate of the last point of bucket j.
    double boundary(std::size_t j) const { return xs_[bucket_end(j) - 1]; }

    entropy_summary table_entry(std::size_t i, std::size_t j, entropy_kind k) const {
        const std::size_t slot = detail::kind_slot(kinds_, k);
        const std::size_t e = tri(i, j);
        return {k, counts_[e], values_[slot][e]};
    }

    entropy_summary query(double a, double b, entropy_kind k, query_stats* stats = nullptr) const {
        const std::size_t slot = detail::kind_slot(kinds_, k);
        const std::size_t n = xs_.size();
        const auto pa = static_cast<std::size_t>(std::lower_bound(xs_.begin(), xs_.end(), a) - xs_.begin());
        const auto pb = static_cast<std::size_t>(std::upper_bound(xs_.begin(), xs_.end(), b) - xs_.begin());
        entropy_summary acc{k, 0.0, 0.0};
        if (pa >= pb) return acc;

        // Largest run of whole buckets inside [pa, pb).
        const std::size_t first = (pa + s_ - 1) / s_;
        const std::size_t last_plus = pb == n ? k_ : pb / s_;
        std::size_t in_lo = pa, in_hi = pa;
        if (first < last_plus) {
            const std::size_t e = tri(first, last_plus - 1);
            acc.count = counts_[e];
            acc.value = values_[slot][e];
            in_lo = first * s_;
            in_hi = bucket_end(last_plus - 1);
            if (stats) ++stats->table_lookups;
        }

        std::vector<std::pair<color_id, double>> fringe;
        fringe.reserve(2 * s_);
        for (std::size_t p = pa; p < in_lo; ++p) fringe.emplace_back(cols_[p], ws_[p]);
        for (std::size_t p = std::max(in_hi, pa); p < pb; ++p) fringe.emplace_back(cols_[p], ws_[p]);
        if (stats) stats->fringe_points += fringe.size();
        std::sort(fringe.begin(), fringe.end());

        for (std::size_t i = 0; i < fringe.size();) {
            const color_id c = fringe[i].first;
            double w = 0;
            for (; i < fringe.size() && fringe[i].first == c; ++i) w += fringe[i].second;
            if (w <= 0) continue;
            const double inside = in_lo < in_hi ? color_weight(c, in_lo, in_hi) : 0.0;
            acc = inside > 0 ? replace_color(acc, inside, inside + w, k) : insert_color(acc, w, k);
        }
        return acc;
    }

    entropy_summary query(const query_rect& r, entropy_kind k, query_stats* stats = nullptr) const {
        if (r.dim() != 1) throw error(error::dimension_mismatch, "exact1d answers one-dimensional queries");
        return query(r.lo[0], r.hi[0], k, stats);
    }

    template <class Archive>
    void save(Archive& ar) const {
        std::vector<double> alphas;
        for (const auto& k : kinds_) alphas.push_back(k.alpha);
        ar(t_, s_, k_, alphas, xs_, cols_, ws_, counts_, values_);
    }

    template <class Archive>
    void load(Archive& ar) {
        std::vector<double> alphas;
        ar(t_, s_, k_, alphas, xs_, cols_, ws_, counts_, values_);
        kinds_.clear();
        for (double a : alphas) kinds_.push_back(entropy_kind{a});
        index_colors();
    }

private:
    void load_points(const colored_point_set& pts) {
        const std::size_t n = pts.size();
        std::vector<std::uint32_t> order(n);
        std::iota(order.begin(), order.end(), 0u);
        std::sort(order.begin(), order.end(), [&](std::uint32_t a, std::uint32_t b) {
            const double xa = pts.coord(a, 0), xb = pts.coord(b, 0);
            return xa < xb || (xa == xb && a < b);
        });
        xs_.resize(n);
        cols_.resize(n);
        ws_.resize(n);
        for (std::size_t i = 0; i < n; ++i) {
            xs_[i] = pts.coord(order[i], 0);
            cols_[i] = pts.color(order[i]);
            ws_[i] = pts.weight(order[i]);
        }
        s_ = detail::ceil_pow(n, t_);
        k_ = n == 0 ? 0 : (n + s_ - 1) / s_;
        index_colors();
    }

    void index_colors() {
        color_id m = 0;
        for (color_id c : cols_) m = std::max<color_id>(m, c + 1);
        color_start_.assign(std::size_t(m) + 1, 0);
        for (color_id c : cols_) ++color_start_[c + 1];
        for (std::size_t c = 0; c < m; ++c) color_start_[c + 1] += color_start_[c];
        color_pos_.assign(cols_.size(), 0);
        color_cum_.assign(cols_.size() + m, 0.0);
        std::vector<std::size_t> fill(color_start_.begin(), color_start_.end() - 1);
        for (std::size_t p = 0; p < cols_.size(); ++p) color_pos_[fill[cols_[p]]++] = static_cast<std::uint32_t>(p);
        // cumulative weights: color c owns cum slots [start + c, start + c + count]
        for (std::size_t c = 0; c < m; ++c) {
            const std::size_t base = color_start_[c] + c;
            color_cum_[base] = 0.0;
            for (std::size_t q = color_start_[c]; q < color_start_[c + 1]; ++q)
                color_cum_[base + (q - color_start_[c]) + 1] = color_cum_[base + (q - color_start_[c])] + ws_[color_pos_[q]];
        }
    }

    double color_weight(color_id c, std::size_t lo, std::size_t hi) const {
        if (std::size_t(c) + 1 >= color_start_.size()) return 0.0;
        const auto b = color_pos_.begin() + color_start_[c];
        const auto e = color_pos_.begin() + color_start_[c + 1];
        const auto l = std::lower_bound(b, e, static_cast<std::uint32_t>(lo)) - b;
        const auto h = std::lower_bound(b, e, static_cast<std::uint32_t>(hi)) - b;
        const std::size_t base = color_start_[c] + c;
        return color_cum_[base + h] - color_cum_[base + l];
    }

    std::size_t bucket_end(std::size_t j) const noexcept { return std::min((j + 1) * s_, xs_.size()); }

    std::size_t tri(std::size_t i, std::size_t j) const noexcept { return i * k_ - i * (i - 1) / 2 + (j - i); }

    void allocate_table() {
        const std::size_t entries = k_ * (k_ + 1) / 2;
        counts_.assign(entries, 0.0);
        values_.assign(kinds_.size(), std::vector<double>(entries, 0.0));
    }

    void build_incremental() {
        allocate_table();
        color_id m = 0;
        for (color_id c : cols_) m = std::max<color_id>(m, c + 1);
        std::vector<double> cnt(m, 0.0);
        std::vector<color_id> touched;
        std::vector<entropy_summary> run(kinds_.size());
        for (std::size_t i = 0; i < k_; ++i) {
            for (color_id c : touched) cnt[c] = 0;
            touched.clear();
            for (std::size_t s = 0; s < kinds_.size(); ++s) run[s] = {kinds_[s], 0.0, 0.0};
            for (std::size_t j = i; j < k_; ++j) {
                for (std::size_t p = j * s_; p < bucket_end(j); ++p) {
                    const double w = ws_[p];
                    if (w <= 0) continue;
                    const color_id c = cols_[p];
                    const double old = cnt[c];
                    if (old == 0) touched.push_back(c);
                    cnt[c] = old + w;
                    for (std::size_t s = 0; s < kinds_.size(); ++s)
                        run[s] = old > 0 ? replace_color(run[s], old, old + w, kinds_[s]) : insert_color(run[s], w, kinds_[s]);
                }
                const std::size_t e = tri(i, j);
                counts_[e] = run[0].count;
                for (std::size_t s = 0; s < kinds_.size(); ++s) values_[s][e] = run[s].value;
            }
        }
    }

    void build_naive() {
        allocate_table();
        for (std::size_t i = 0; i < k_; ++i) {
            for (std::size_t j = i; j < k_; ++j) {
                color_histogram h;
                for (std::size_t p = i * s_; p < bucket_end(j); ++p) h.add(cols_[p], ws_[p]);
                const std::size_t e = tri(i, j);
                counts_[e] = h.total();
                for (std::size_t s = 0; s < kinds_.size(); ++s) values_[s][e] = entropy(h, kinds_[s]).value;
            }
        }
    }

    double t_ = 0.5;
    std::size_t s_ = 1, k_ = 0;
    std::vector<entropy_kind> kinds_;
    std::vector<double> xs_;
    std::vector<color_id> cols_;
    std::vector<double> ws_;
    std::vector<double> counts_;
    std::vector<std::vector<double>> values_;
    std::vector<std::size_t> color_start_;
    std::vector<std::uint32_t> color_pos_;
    std::vector<double> color_cum_;
};

}  // namespace rqe
