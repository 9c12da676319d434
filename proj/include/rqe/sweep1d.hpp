#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <vector>

#include "rqe/core.hpp"
#include "rqe/rangetree.hpp"

namespace rqe {

struct sweep_options {
    /// Distinct-color nodes with at most this many points keep no threshold
    /// runs and evaluate their levels from per-color ranks at query time.
    /// Negative selects ceil(log2 n).
    long long small_node = -1;
};

struct sweep_query_stats {
    std::size_t canonical_nodes = 0;
    std::size_t stored_nodes = 0;  ///< nodes answered from threshold runs
    std::size_t merge_depth = 0;
};

/// Deterministic range entropy on the line. Each point of color u is lifted to
/// (x, x of the previous point of u), so every color occurring in [l, r] shows
/// up exactly once in [l, r] x (-inf, l). Canonical nodes of a two-level tree
/// over the lifted points then hold pairwise distinct colors, and each one keeps
/// the (1+e')-levels of its count and of F = N*H (Shannon) or G = sum N_i^alpha
/// (Renyi) as step functions of the right end r.
class sweep1d_index {
public:
    static constexpr std::uint32_t zero_level = std::numeric_limits<std::uint32_t>::max();

    /// Threshold runs of one stored node: from coordinate x on, the count level
    /// is s and the F or G level is h, until the next run starts.
    struct run {
        double x = 0;
        std::uint32_t s = 0, h = 0;
    };

    struct node_view {
        std::vector<std::uint32_t> members;  ///< lifted point ids
        std::vector<run> runs;               ///< empty for nodes evaluated at query time
    };

    struct canonical_view {
        std::vector<color_id> colors;
        std::uint32_t s = 0, h = 0;
    };

    sweep1d_index() = default;

    sweep1d_index(const colored_point_set& pts, entropy_kind kind, double eps, sweep_options opt = {})
        : kind_(kind), eps_(eps) {
        if (pts.dim() != 1) throw error(error::dimension_mismatch, "sweep1d needs one-dimensional points");
        if (!(eps > 0 && eps < 1)) throw error(error::invalid_argument, "epsilon must lie in (0, 1)");
        if (!kind.is_shannon()) detail::require_renyi(kind.alpha);
        if (!pts.unit_weights()) throw error(error::invalid_weight, "sweep1d accepts unit weights only");
        n_ = pts.size();
        const double lg = std::log2(std::max<double>(2.0, double(n_)));
        tau_ = opt.small_node >= 0 ? std::size_t(opt.small_node) : std::size_t(std::ceil(lg));
        if (kind_.is_shannon())
            eps_inner_ = eps / (16.0 * std::max(1.0, std::log2(std::max(1.0, lg))));
        else
            eps_inner_ = eps / 2.0;
        lift(pts);
        build_powers();
        build_tree();
    }

    std::size_t size() const noexcept { return n_; }
    entropy_kind kind() const noexcept { return kind_; }
    double epsilon() const noexcept { return eps_; }
    double inner_epsilon() const noexcept { return eps_inner_; }
    std::size_t small_node_limit() const noexcept { return tau_; }
    std::size_t num_stored_nodes() const noexcept { return run_off_.empty() ? 0 : run_off_.size() - 1; }
    std::size_t stored_runs() const noexcept { return run_x_.size(); }

    /// (1+e')^i.
    double power(std::uint32_t i) const { return pw_[i]; }

    /// Smallest i with (1+e')^i >= v, or zero_level for v = 0.
    std::uint32_t level(double v) const {
        if (!(v > 0)) return zero_level;
        const double target = v * (1.0 - 1e-10);
        auto it = std::lower_bound(pw_.begin(), pw_.end(), target);
        if (it == pw_.end()) throw error(error::invalid_argument, "value beyond the threshold range");
        return static_cast<std::uint32_t>(it - pw_.begin());
    }

    /// F or G of a histogram of counts, using the same arithmetic as the build.
    double secondary_value(const std::vector<double>& counts) const {
        double n = 0, acc = 0;
        for (double c : counts) {
            if (c <= 0) continue;
            n += c;
            acc += kind_.is_shannon() ? xlog2x(c) : std::pow(c, kind_.alpha);
        }
        return kind_.is_shannon() ? std::max(0.0, xlog2x(n) - acc) : acc;
    }

    entropy_summary query(double l, double r, sweep_query_stats* stats = nullptr) const {
        entropy_summary out{kind_, 0.0, 0.0};
        if (n_ == 0 || l > r) return out;
        std::vector<leaf> leaves;
        collect(l, r, leaves, nullptr);
        if (stats) {
            stats->canonical_nodes += leaves.size();
            for (const auto& v : leaves) stats->stored_nodes += v.stored ? 1 : 0;
        }
        if (leaves.empty()) return out;
        out.count = double(std::upper_bound(prim_x_.begin(), prim_x_.end(), r) -
                           std::lower_bound(prim_x_.begin(), prim_x_.end(), l));
        out.value = kind_.is_shannon() ? combine_shannon(leaves, stats) : combine_renyi(leaves);
        return out;
    }

    entropy_summary query(const query_rect& r, sweep_query_stats* stats = nullptr) const {
        if (r.dim() != 1) throw error(error::dimension_mismatch, "sweep1d answers one-dimensional queries");
        return query(r.lo[0], r.hi[0], stats);
    }

    /// Canonical nodes of [l, r] with their levels.
    std::vector<canonical_view> canonical(double l, double r) const {
        std::vector<leaf> leaves;
        std::vector<canonical_view> out;
        if (n_ == 0 || l > r) return out;
        std::vector<std::pair<std::uint32_t, std::uint32_t>> slices;
        collect(l, r, leaves, &slices);
        for (std::size_t i = 0; i < leaves.size(); ++i) {
            canonical_view v;
            for (std::uint32_t p = slices[i].first; p < slices[i].second; ++p) v.colors.push_back(lcol_[assoc_[p]]);
            v.s = leaves[i].s;
            v.h = leaves[i].h;
            out.push_back(std::move(v));
        }
        return out;
    }

    /// Every node that stores threshold runs.
    std::vector<node_view> stored_nodes() const {
        std::vector<node_view> out(num_stored_nodes());
        for (std::size_t i = 0; i < out.size(); ++i) {
            for (std::uint32_t p = run_lo_[i]; p < run_hi_[i]; ++p) out[i].members.push_back(assoc_[p]);
            for (std::uint32_t q = run_off_[i]; q < run_off_[i + 1]; ++q) out[i].runs.push_back({run_x_[q], run_s_[q], run_h_[q]});
        }
        return out;
    }

    /// Threshold array of a stored node: entry i is the largest data coordinate
    /// at which the count (`of_count`) or F/G level is at most i, or -inf.
    std::vector<double> threshold_array(const node_view& v, bool of_count) const {
        std::uint32_t top = 0;
        for (const auto& r : v.runs) {
            const std::uint32_t lv = of_count ? r.s : r.h;
            if (lv != zero_level) top = std::max(top, lv);
        }
        std::vector<double> out(std::size_t(top) + 1, -std::numeric_limits<double>::infinity());
        // last coordinate covered by each run
        for (std::size_t k = 0; k < v.runs.size(); ++k) {
            const std::uint32_t lv = of_count ? v.runs[k].s : v.runs[k].h;
            const double last = k + 1 < v.runs.size() ? last_event_before(v, v.runs[k + 1].x) : last_event(v);
            const std::uint32_t from = lv == zero_level ? 0 : lv;
            for (std::uint32_t i = from; i <= top; ++i) out[i] = std::max(out[i], last);
        }
        return out;
    }

    /// Lifted point i: original coordinate, previous coordinate of the same color, color.
    double lifted_x(std::uint32_t i) const { return lx_[i]; }
    double lifted_prev(std::uint32_t i) const { return lp_[i]; }
    color_id lifted_color(std::uint32_t i) const { return lcol_[i]; }

    /// Number of points of color c in [x of lifted point i, r].
    double count_from(std::uint32_t i, double r) const {
        const color_id c = lcol_[i];
        const auto b = cx_.begin() + locc_[i];
        const auto e = cx_.begin() + cstart_[c + 1];
        return double(std::upper_bound(b, e, r) - b);
    }

    template <class Archive>
    void save(Archive& ar) const {
        ar(kind_.alpha, eps_, eps_inner_, n_, tau_, lx_, lp_, lcol_, locc_, cstart_, cx_, prim_x_, pw_, assoc_off_,
           assoc_, assoc_key_, sec_base_, sec_node_, run_off_, run_lo_, run_hi_, run_x_, run_s_, run_h_);
    }

    template <class Archive>
    void load(Archive& ar) {
        ar(kind_.alpha, eps_, eps_inner_, n_, tau_, lx_, lp_, lcol_, locc_, cstart_, cx_, prim_x_, pw_, assoc_off_,
           assoc_, assoc_key_, sec_base_, sec_node_, run_off_, run_lo_, run_hi_, run_x_, run_s_, run_h_);
    }

private:
    static constexpr std::int32_t repeated = -1;
    static constexpr std::int32_t small = -2;

    struct leaf {
        std::uint32_t s = 0, h = 0;
        bool stored = false;
    };

    static double xlog2x(double c) { return c > 0 ? c * std::log2(c) : 0.0; }

    void lift(const colored_point_set& pts) {
        std::vector<std::uint32_t> order(n_);
        std::iota(order.begin(), order.end(), 0u);
        std::sort(order.begin(), order.end(), [&](std::uint32_t a, std::uint32_t b) {
            const color_id ca = pts.color(a), cb = pts.color(b);
            if (ca != cb) return ca < cb;
            const double xa = pts.coord(a, 0), xb = pts.coord(b, 0);
            return xa < xb || (xa == xb && a < b);
        });
        const std::size_t m = pts.num_colors();
        cstart_.assign(m + 1, 0);
        for (std::size_t i = 0; i < n_; ++i) ++cstart_[pts.color(i) + 1];
        for (std::size_t c = 0; c < m; ++c) cstart_[c + 1] += cstart_[c];
        cx_.resize(n_);
        lx_.resize(n_);
        lp_.resize(n_);
        lcol_.resize(n_);
        locc_.resize(n_);
        for (std::size_t q = 0; q < n_; ++q) {
            const std::uint32_t id = order[q];
            const color_id c = pts.color(id);
            cx_[q] = pts.coord(id, 0);
            lx_[q] = cx_[q];
            lp_[q] = q == cstart_[c] ? -std::numeric_limits<double>::infinity() : cx_[q - 1];
            lcol_[q] = c;
            locc_[q] = static_cast<std::uint32_t>(q);
        }
    }

    void build_powers() {
        const double n = std::max<double>(2.0, double(n_));
        const double top = kind_.is_shannon() ? n * std::log2(n) + 2.0 : std::pow(n, kind_.alpha) + 2.0;
        pw_.clear();
        const double base = 1.0 + eps_inner_;
        for (std::uint32_t i = 0;; ++i) {
            pw_.push_back(std::pow(base, double(i)));
            if (pw_.back() >= top) break;
        }
    }

    void build_tree() {
        std::vector<std::uint32_t> prim(n_);
        std::iota(prim.begin(), prim.end(), 0u);
        std::sort(prim.begin(), prim.end(), [&](std::uint32_t a, std::uint32_t b) {
            if (lx_[a] != lx_[b]) return lx_[a] < lx_[b];
            if (lp_[a] != lp_[b]) return lp_[a] < lp_[b];
            return a < b;
        });
        prim_x_.resize(n_);
        for (std::size_t i = 0; i < n_; ++i) prim_x_[i] = lx_[prim[i]];
        if (n_ == 0) return;
        assoc_off_.assign(4 * n_, 0);
        sec_base_.assign(4 * n_, 0);
        run_off_.assign(1, 0);
        mark_.assign(cstart_.size(), 0);
        cnt_.assign(cstart_.size(), 0.0);
        build_primary(prim, 1, 0, static_cast<std::uint32_t>(n_));
        mark_.clear();
        mark_.shrink_to_fit();
        cnt_.clear();
        cnt_.shrink_to_fit();
    }

    // Leaves prim[lo, hi) sorted by previous coordinate.
    void build_primary(std::vector<std::uint32_t>& prim, std::uint32_t heap, std::uint32_t lo, std::uint32_t hi) {
        if (hi - lo > 1) {
            const std::uint32_t mid = lo + (hi - lo) / 2;
            build_primary(prim, 2 * heap, lo, mid);
            build_primary(prim, 2 * heap + 1, mid, hi);
            std::inplace_merge(prim.begin() + lo, prim.begin() + mid, prim.begin() + hi, [&](std::uint32_t a, std::uint32_t b) {
                return lp_[a] < lp_[b] || (lp_[a] == lp_[b] && a < b);
            });
            std::vector<std::uint32_t> merged(prim.begin() + lo, prim.begin() + hi);
            add_assoc(heap, merged);
            return;
        }
        std::vector<std::uint32_t> one(prim.begin() + lo, prim.begin() + hi);
        add_assoc(heap, one);
    }

    void add_assoc(std::uint32_t heap, const std::vector<std::uint32_t>& sorted_by_prev) {
        const auto off = static_cast<std::uint32_t>(assoc_.size());
        const auto m = static_cast<std::uint32_t>(sorted_by_prev.size());
        assoc_off_[heap] = off;
        for (auto id : sorted_by_prev) {
            assoc_.push_back(id);
            assoc_key_.push_back(lp_[id]);
        }
        sec_base_[heap] = static_cast<std::uint32_t>(sec_node_.size());
        sec_node_.resize(sec_node_.size() + 4 * std::size_t(m), repeated);
        build_secondary(heap, 1, off, off + m);
    }

    bool build_secondary(std::uint32_t prim_heap, std::uint32_t heap, std::uint32_t lo, std::uint32_t hi) {
        bool distinct = true;
        if (hi - lo > 1) {
            const std::uint32_t mid = lo + (hi - lo) / 2;
            const bool a = build_secondary(prim_heap, 2 * heap, lo, mid);
            const bool b = build_secondary(prim_heap, 2 * heap + 1, mid, hi);
            distinct = a && b;
            if (distinct) {
                ++epoch_;
                for (std::uint32_t p = lo; p < mid; ++p) mark_[lcol_[assoc_[p]]] = epoch_;
                for (std::uint32_t p = mid; p < hi && distinct; ++p)
                    if (mark_[lcol_[assoc_[p]]] == epoch_) distinct = false;
            }
        }
        std::int32_t& slot = sec_node_[sec_base_[prim_heap] + heap];
        if (!distinct) {
            slot = repeated;
        } else if (hi - lo <= tau_) {
            slot = small;
        } else {
            slot = static_cast<std::int32_t>(run_off_.size() - 1);
            build_runs(lo, hi);
        }
        return distinct;
    }

    void build_runs(std::uint32_t lo, std::uint32_t hi) {
        std::vector<std::pair<double, color_id>> events;
        for (std::uint32_t p = lo; p < hi; ++p) {
            const std::uint32_t id = assoc_[p];
            const color_id c = lcol_[id];
            for (std::uint32_t q = locc_[id]; q < cstart_[c + 1]; ++q) events.emplace_back(cx_[q], c);
        }
        std::sort(events.begin(), events.end());
        double n = 0, acc = 0;
        std::uint32_t last_s = zero_level, last_h = zero_level;
        bool first = true;
        for (std::size_t i = 0; i < events.size();) {
            const double x = events[i].first;
            for (; i < events.size() && events[i].first == x; ++i) {
                const color_id c = events[i].second;
                const double old = cnt_[c];
                cnt_[c] = old + 1.0;
                n += 1.0;
                acc += kind_.is_shannon() ? xlog2x(old + 1.0) - xlog2x(old)
                                          : std::pow(old + 1.0, kind_.alpha) - std::pow(old, kind_.alpha);
            }
            const double sec = kind_.is_shannon() ? std::max(0.0, xlog2x(n) - acc) : acc;
            const std::uint32_t s = level(n), h = level(sec);
            if (first || s != last_s || h != last_h) {
                run_x_.push_back(x);
                run_s_.push_back(s);
                run_h_.push_back(h);
                last_s = s;
                last_h = h;
                first = false;
            }
        }
        for (const auto& e : events) cnt_[e.second] = 0.0;
        run_lo_.push_back(lo);
        run_hi_.push_back(hi);
        run_off_.push_back(static_cast<std::uint32_t>(run_x_.size()));
    }

    void collect(double l, double r, std::vector<leaf>& out,
                 std::vector<std::pair<std::uint32_t, std::uint32_t>>* slices) const {
        const auto a = static_cast<std::uint32_t>(std::lower_bound(prim_x_.begin(), prim_x_.end(), l) - prim_x_.begin());
        const auto b = static_cast<std::uint32_t>(std::upper_bound(prim_x_.begin(), prim_x_.end(), r) - prim_x_.begin());
        if (a >= b) return;
        primary(1, 0, static_cast<std::uint32_t>(n_), a, b, l, r, out, slices);
    }

    void primary(std::uint32_t heap, std::uint32_t lo, std::uint32_t hi, std::uint32_t a, std::uint32_t b, double l,
                 double r, std::vector<leaf>& out,
                 std::vector<std::pair<std::uint32_t, std::uint32_t>>* slices) const {
        if (b <= lo || hi <= a) return;
        if (a <= lo && hi <= b) {
            const std::uint32_t off = assoc_off_[heap];
            const auto keys = assoc_key_.begin() + off;
            const auto p = static_cast<std::uint32_t>(std::lower_bound(keys, keys + (hi - lo), l) - keys);
            if (p > 0) secondary(heap, 1, off, off + (hi - lo), off + p, r, out, slices);
            return;
        }
        const std::uint32_t mid = lo + (hi - lo) / 2;
        primary(2 * heap, lo, mid, a, b, l, r, out, slices);
        primary(2 * heap + 1, mid, hi, a, b, l, r, out, slices);
    }

    // Prefix [lo, cut) of the associated array of primary node `prim_heap`.
    void secondary(std::uint32_t prim_heap, std::uint32_t heap, std::uint32_t lo, std::uint32_t hi, std::uint32_t cut,
                   double r, std::vector<leaf>& out,
                   std::vector<std::pair<std::uint32_t, std::uint32_t>>* slices) const {
        if (cut <= lo) return;
        if (hi <= cut) {
            out.push_back(evaluate(sec_node_[sec_base_[prim_heap] + heap], lo, hi, r));
            if (slices) slices->emplace_back(lo, hi);
            return;
        }
        const std::uint32_t mid = lo + (hi - lo) / 2;
        secondary(prim_heap, 2 * heap, lo, mid, cut, r, out, slices);
        secondary(prim_heap, 2 * heap + 1, mid, hi, cut, r, out, slices);
    }

    leaf evaluate(std::int32_t slot, std::uint32_t lo, std::uint32_t hi, double r) const {
        leaf v;
        if (slot >= 0) {
            const auto b = run_x_.begin() + run_off_[slot];
            const auto e = run_x_.begin() + run_off_[slot + 1];
            const auto k = static_cast<std::size_t>(std::upper_bound(b, e, r) - run_x_.begin()) - 1;
            v.s = run_s_[k];
            v.h = run_h_[k];
            v.stored = true;
            return v;
        }
        double n = 0, acc = 0;
        for (std::uint32_t p = lo; p < hi; ++p) {
            const double c = count_from(assoc_[p], r);
            n += c;
            acc += kind_.is_shannon() ? xlog2x(c) : std::pow(c, kind_.alpha);
        }
        const double sec = kind_.is_shannon() ? std::max(0.0, xlog2x(n) - acc) : acc;
        v.s = level(n);
        v.h = level(sec);
        return v;
    }

    double lower_count(std::uint32_t s) const { return s == 0 ? 1.0 / (1.0 + eps_inner_) : pw_[s - 1]; }

    struct part {
        double nu = 0, nl = 0, h = 0;
    };

    double combine_shannon(std::vector<leaf>& leaves, sweep_query_stats* stats) const {
        std::vector<part> cur;
        cur.reserve(leaves.size());
        for (const auto& v : leaves) {
            part p;
            p.nu = pw_[v.s];
            p.nl = lower_count(v.s);
            p.h = v.h == zero_level ? 0.0 : pw_[v.h] / p.nl;
            cur.push_back(p);
        }
        std::size_t depth = 0;
        while (cur.size() > 1) {
            std::vector<part> next;
            next.reserve((cur.size() + 1) / 2);
            for (std::size_t i = 0; i + 1 < cur.size(); i += 2) {
                const part& a = cur[i];
                const part& b = cur[i + 1];
                part m;
                m.nu = a.nu + b.nu;
                m.nl = a.nl + b.nl;
                m.h = (a.nu * a.h + b.nu * b.h + a.nu * std::log2(m.nu / a.nl) + b.nu * std::log2(m.nu / b.nl)) / m.nl;
                next.push_back(m);
            }
            if (cur.size() % 2) next.push_back(cur.back());
            cur.swap(next);
            ++depth;
        }
        if (stats) stats->merge_depth = std::max(stats->merge_depth, depth);
        return cur.front().h;
    }

    double combine_renyi(const std::vector<leaf>& leaves) const {
        double s = 0, g = 0;
        for (const auto& v : leaves) {
            s += pw_[v.s];
            g += lower_count(v.h);
        }
        const double a = kind_.alpha;
        return std::max(0.0, (a * std::log2(s) - std::log2(g)) / (a - 1.0));
    }

    double last_event(const node_view& v) const {
        double x = -std::numeric_limits<double>::infinity();
        for (auto id : v.members) x = std::max(x, cx_[cstart_[lcol_[id] + 1] - 1]);
        return x;
    }

    double last_event_before(const node_view& v, double bound) const {
        double x = -std::numeric_limits<double>::infinity();
        for (auto id : v.members) {
            const auto b = cx_.begin() + locc_[id];
            const auto e = cx_.begin() + cstart_[lcol_[id] + 1];
            const auto it = std::lower_bound(b, e, bound);
            if (it != b) x = std::max(x, *(it - 1));
        }
        return x;
    }

    entropy_kind kind_{};
    double eps_ = 0.1, eps_inner_ = 0.1;
    std::size_t n_ = 0, tau_ = 0;

    // lifted points, grouped by color and sorted by x within a color
    std::vector<double> lx_, lp_;
    std::vector<color_id> lcol_;
    std::vector<std::uint32_t> locc_;
    std::vector<std::uint32_t> cstart_;
    std::vector<double> cx_;

    std::vector<double> prim_x_;
    std::vector<double> pw_;
    std::vector<std::uint32_t> assoc_off_, assoc_;
    std::vector<double> assoc_key_;
    std::vector<std::uint32_t> sec_base_;
    std::vector<std::int32_t> sec_node_;
    std::vector<std::uint32_t> run_off_, run_lo_, run_hi_;
    std::vector<double> run_x_;
    std::vector<std::uint32_t> run_s_, run_h_;

    // build scratch
    std::vector<std::uint32_t> mark_;
    std::vector<double> cnt_;
    std::uint32_t epoch_ = 0;
};

}  // namespace rqe
