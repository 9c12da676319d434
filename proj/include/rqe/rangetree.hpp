#pragma once

#include <algorithm>
#include <cstdint>
#include <limits>
#include <numeric>
#include <random>
#include <vector>

#include "rqe/core.hpp"

namespace rqe {

using rng_type = std::mt19937_64;

/// Uniform double in [0, 1) from the top 53 bits, identical on every platform.
inline double uniform01(rng_type& rng) { return double(rng() >> 11) * 0x1.0p-53; }

/// Axis-aligned closed box.
struct query_rect {
    std::vector<double> lo, hi;

    static query_rect everything(std::size_t d) {
        constexpr double inf = std::numeric_limits<double>::infinity();
        return {std::vector<double>(d, -inf), std::vector<double>(d, inf)};
    }

    static query_rect interval(double a, double b) { return {{a}, {b}}; }

    std::size_t dim() const noexcept { return lo.size(); }

    bool contains(const double* p) const noexcept {
        for (std::size_t k = 0; k < lo.size(); ++k)
            if (p[k] < lo[k] || p[k] > hi[k]) return false;
        return true;
    }

    bool is_empty() const noexcept {
        for (std::size_t k = 0; k < lo.size(); ++k)
            if (lo[k] > hi[k]) return true;
        return false;
    }
};

/// Multi-level range tree. Every level except the last is an implicit balanced
/// tree over the points sorted by one coordinate, and each of its nodes owns an
/// associated structure for the next coordinate. Canonical nodes are slices of
/// last-level arrays that coincide with implicit tree nodes.
class range_tree {
public:
    struct node_ref {
        std::uint32_t layer = 0;
        std::uint32_t heap = 0;  ///< implicit node id inside the layer, root = 1
        std::uint32_t lo = 0, hi = 0;
        double weight = 0;
    };

    range_tree() = default;

    /// Builds over every point of `pts`. With `color_aware`, last-level arrays also
    /// keep per-color positions so that the weight of one color under any node can
    /// be read off by binary search.
    explicit range_tree(const colored_point_set& pts, bool color_aware = false)
        : range_tree(pts, all_ids(pts.size()), color_aware) {}

    range_tree(const colored_point_set& pts, std::vector<std::uint32_t> ids, bool color_aware)
        : pts_(&pts), dim_(pts.dim()), color_aware_(color_aware) {
        std::sort(ids.begin(), ids.end(), by_coord(0));
        n_ = ids.size();
        layers_.reserve(64);
        root_ = build_layer(std::move(ids), 0);
    }

    std::size_t size() const noexcept { return n_; }
    std::size_t dim() const noexcept { return dim_; }
    const colored_point_set& points() const noexcept { return *pts_; }

    /// Total stored array slots over every level; the space proxy used in benchmarks.
    std::size_t footprint() const noexcept {
        std::size_t s = 0;
        for (const auto& l : layers_) s += l.ids.size();
        return s;
    }

    std::vector<node_ref> canonical_nodes(const query_rect& r) const {
        std::vector<node_ref> out;
        if (n_ == 0 || r.is_empty()) return out;
        if (r.dim() != dim_) throw error(error::dimension_mismatch, "query dimension differs from tree dimension");
        collect(root_, r, out);
        return out;
    }

    double range_weight(const query_rect& r) const {
        double w = 0;
        for (const auto& v : canonical_nodes(r)) w += v.weight;
        return w;
    }

    std::size_t range_count(const query_rect& r) const {
        std::size_t c = 0;
        for (const auto& v : canonical_nodes(r)) c += v.hi - v.lo;
        return c;
    }

    /// Point ids stored under a canonical node, in last-coordinate order.
    std::vector<std::uint32_t> node_points(const node_ref& v) const {
        const auto& l = layers_[v.layer];
        return {l.ids.begin() + v.lo, l.ids.begin() + v.hi};
    }

    /// Weight of color `c` under node `v`; requires a color-aware build.
    double node_color_weight(const node_ref& v, color_id c) const {
        return color_weight(layers_[v.layer], c, v.lo, v.hi);
    }

    /// Weighted draw: pick a canonical node by weight, then walk down by child weight.
    std::uint32_t sample(const std::vector<node_ref>& nodes, rng_type& rng) const {
        double total = 0;
        for (const auto& v : nodes) total += v.weight;
        if (!(total > 0)) throw error(error::empty_range, "cannot sample from an empty range");
        double u = uniform01(rng) * total;
        std::size_t pick = nodes.size();
        for (std::size_t i = 0; i < nodes.size(); ++i) {
            if (nodes[i].weight <= 0) continue;
            pick = i;
            if (u < nodes[i].weight) break;
            u -= nodes[i].weight;
        }
        const node_ref& v = nodes[pick];
        const layer& l = layers_[v.layer];
        std::uint32_t lo = v.lo, hi = v.hi;
        while (hi - lo > 1) {
            const std::uint32_t mid = lo + (hi - lo) / 2;
            const double wl = l.prefix[mid] - l.prefix[lo];
            const double wr = l.prefix[hi] - l.prefix[mid];
            if (wr <= 0 || (wl > 0 && u < wl)) {
                hi = mid;
            } else {
                u -= wl;
                lo = mid;
            }
        }
        return l.ids[lo];
    }

    std::uint32_t sample(const query_rect& r, rng_type& rng) const { return sample(canonical_nodes(r), rng); }

    /// Weighted draw over points whose color differs from `excluded`: node weights
    /// become w(v) - M_v[excluded] and the descent uses the same correction.
    std::uint32_t sample_excluding(const std::vector<node_ref>& nodes, color_id excluded, rng_type& rng) const {
        if (!color_aware_) throw error(error::invalid_argument, "sample_excluding needs a color-aware tree");
        std::vector<double> w(nodes.size());
        double total = 0;
        for (std::size_t i = 0; i < nodes.size(); ++i) {
            w[i] = std::max(0.0, nodes[i].weight - node_color_weight(nodes[i], excluded));
            total += w[i];
        }
        if (!(total > 0)) throw error(error::empty_range, "no point outside the excluded color");
        double u = uniform01(rng) * total;
        std::size_t pick = nodes.size();
        for (std::size_t i = 0; i < nodes.size(); ++i) {
            if (w[i] <= 0) continue;
            pick = i;
            if (u < w[i]) break;
            u -= w[i];
        }
        const node_ref& v = nodes[pick];
        const layer& l = layers_[v.layer];
        std::uint32_t lo = v.lo, hi = v.hi;
        while (hi - lo > 1) {
            const std::uint32_t mid = lo + (hi - lo) / 2;
            const double wl = l.prefix[mid] - l.prefix[lo] - color_weight(l, excluded, lo, mid);
            const double wr = l.prefix[hi] - l.prefix[mid] - color_weight(l, excluded, mid, hi);
            if (wr <= 0 || (wl > 0 && u < wl)) {
                hi = mid;
            } else {
                u -= std::max(0.0, wl);
                lo = mid;
            }
        }
        return l.ids[lo];
    }

    std::uint32_t sample_excluding(const query_rect& r, color_id excluded, rng_type& rng) const {
        return sample_excluding(canonical_nodes(r), excluded, rng);
    }

private:
    struct layer {
        std::uint32_t dim = 0;
        std::vector<std::uint32_t> ids;
        std::vector<double> keys;
        std::vector<double> prefix;                // last level only
        std::vector<std::uint32_t> child;          // heap id -> layer, inner levels only
        std::vector<std::uint64_t> color_pos;      // (color << 32 | position), last level, color-aware
        std::vector<double> color_prefix;          // prefix weights along color_pos
    };

    static std::vector<std::uint32_t> all_ids(std::size_t n) {
        std::vector<std::uint32_t> v(n);
        std::iota(v.begin(), v.end(), 0u);
        return v;
    }

    struct coord_less {
        const colored_point_set* pts;
        std::size_t k;
        bool operator()(std::uint32_t a, std::uint32_t b) const {
            const double ca = pts->coord(a, k), cb = pts->coord(b, k);
            return ca < cb || (ca == cb && a < b);
        }
    };

    coord_less by_coord(std::size_t k) const { return {pts_, k}; }

    std::uint32_t build_layer(std::vector<std::uint32_t> ids, std::uint32_t k) {
        const auto idx = static_cast<std::uint32_t>(layers_.size());
        layers_.emplace_back();
        {
            layer& l = layers_.back();
            l.dim = k;
            l.keys.resize(ids.size());
            for (std::size_t i = 0; i < ids.size(); ++i) l.keys[i] = pts_->coord(ids[i], k);
        }
        if (k + 1 == dim_) {
            layer& l = layers_[idx];
            l.prefix.assign(ids.size() + 1, 0.0);
            for (std::size_t i = 0; i < ids.size(); ++i) l.prefix[i + 1] = l.prefix[i] + pts_->weight(ids[i]);
            if (color_aware_) {
                l.color_pos.resize(ids.size());
                for (std::size_t i = 0; i < ids.size(); ++i)
                    l.color_pos[i] = (std::uint64_t(pts_->color(ids[i])) << 32) | i;
                std::sort(l.color_pos.begin(), l.color_pos.end());
                l.color_prefix.assign(ids.size() + 1, 0.0);
                for (std::size_t i = 0; i < ids.size(); ++i)
                    l.color_prefix[i + 1] = l.color_prefix[i] + pts_->weight(ids[l.color_pos[i] & 0xffffffffu]);
            }
            l.ids = std::move(ids);
            return idx;
        }
        // Inner level: build associated structures bottom-up so each node's
        // next-coordinate order comes from merging its children.
        const std::size_t m = ids.size();
        std::vector<std::uint32_t> child(m == 0 ? 0 : 4 * m, 0);
        std::vector<std::uint32_t> scratch = ids;
        if (m > 0) build_assoc(ids, scratch, 1, 0, static_cast<std::uint32_t>(m), k + 1, child);
        layers_[idx].child = std::move(child);
        layers_[idx].ids = std::move(ids);
        return idx;
    }

    // Sorts scratch[lo, hi) by coordinate k1 and creates the associated layer of
    // node `heap` (and recursively of its descendants).
    void build_assoc(const std::vector<std::uint32_t>& ids, std::vector<std::uint32_t>& scratch, std::uint32_t heap,
                     std::uint32_t lo, std::uint32_t hi, std::uint32_t k1, std::vector<std::uint32_t>& child) {
        if (hi - lo == 1) {
            scratch[lo] = ids[lo];
        } else {
            const std::uint32_t mid = lo + (hi - lo) / 2;
            build_assoc(ids, scratch, 2 * heap, lo, mid, k1, child);
            build_assoc(ids, scratch, 2 * heap + 1, mid, hi, k1, child);
            std::inplace_merge(scratch.begin() + lo, scratch.begin() + mid, scratch.begin() + hi, by_coord(k1));
        }
        std::vector<std::uint32_t> sub(scratch.begin() + lo, scratch.begin() + hi);
        child[heap] = build_layer(std::move(sub), k1);
    }

    double color_weight(const layer& l, color_id c, std::uint32_t lo, std::uint32_t hi) const {
        const std::uint64_t key = std::uint64_t(c) << 32;
        const auto a = std::lower_bound(l.color_pos.begin(), l.color_pos.end(), key | lo);
        const auto b = std::lower_bound(a, l.color_pos.end(), key | hi);
        return l.color_prefix[b - l.color_pos.begin()] - l.color_prefix[a - l.color_pos.begin()];
    }

    void collect(std::uint32_t li, const query_rect& r, std::vector<node_ref>& out) const {
        const layer& l = layers_[li];
        const auto a = static_cast<std::uint32_t>(std::lower_bound(l.keys.begin(), l.keys.end(), r.lo[l.dim]) - l.keys.begin());
        const auto b = static_cast<std::uint32_t>(std::upper_bound(l.keys.begin(), l.keys.end(), r.hi[l.dim]) - l.keys.begin());
        if (a >= b) return;
        decompose(li, r, 1, 0, static_cast<std::uint32_t>(l.ids.size()), a, b, out);
    }

    void decompose(std::uint32_t li, const query_rect& r, std::uint32_t heap, std::uint32_t lo, std::uint32_t hi,
                   std::uint32_t a, std::uint32_t b, std::vector<node_ref>& out) const {
        if (b <= lo || hi <= a) return;
        const layer& l = layers_[li];
        if (a <= lo && hi <= b) {
            if (l.child.empty()) {
                out.push_back({li, heap, lo, hi, l.prefix[hi] - l.prefix[lo]});
            } else {
                collect(l.child[heap], r, out);
            }
            return;
        }
        const std::uint32_t mid = lo + (hi - lo) / 2;
        decompose(li, r, 2 * heap, lo, mid, a, b, out);
        decompose(li, r, 2 * heap + 1, mid, hi, a, b, out);
    }

    const colored_point_set* pts_ = nullptr;
    std::size_t dim_ = 1;
    std::size_t n_ = 0;
    bool color_aware_ = false;
    std::uint32_t root_ = 0;
    std::vector<layer> layers_;
};

/// One range tree per color; answers w(P(u) ∩ R) for a single color u.
class per_color_trees {
public:
    per_color_trees() = default;

    explicit per_color_trees(const colored_point_set& pts) {
        std::vector<std::vector<std::uint32_t>> by_color(pts.num_colors());
        for (std::uint32_t i = 0; i < pts.size(); ++i) by_color[pts.color(i)].push_back(i);
        trees_.reserve(by_color.size());
        for (auto& ids : by_color) trees_.emplace_back(pts, std::move(ids), false);
    }

    double color_range_count(const query_rect& r, color_id c) const {
        if (c >= trees_.size()) return 0.0;
        return trees_[c].range_weight(r);
    }

    std::size_t num_colors() const noexcept { return trees_.size(); }

private:
    std::vector<range_tree> trees_;
};

}  // namespace rqe
