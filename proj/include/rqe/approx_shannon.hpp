#pragma once

#include <cmath>
#include <cstdint>
#include <memory>
#include <optional>
#include <unordered_map>
#include <vector>

#include "rqe/core.hpp"
#include "rqe/rangetree.hpp"

namespace rqe {

/// Sample-count constants for the randomized estimators.
struct estimator_config {
    double c_add = 1.0;
    double c_mult = 1.0;
    double c_heavy = 1.0;
    double c_mom = 1.0;
    double c1 = 8.0;  ///< outer accuracy split of the heavy Renyi branch
    double c2 = 8.0;  ///< inner accuracy split of the heavy Renyi branch
    /// Compute a stage exactly when it would need more than n log n draws.
    bool exact_fallback = true;
};

/// A randomized answer plus how it was obtained.
struct estimate {
    entropy_summary summary;
    std::size_t samples = 0;
    bool fallback = false;  ///< at least one stage was computed exactly because of the sample cap
    bool heavy = false;     ///< a color above 2/3 of the mass was found and verified
};

struct heavy_color {
    color_id color = 0;
    double weight = 0;  ///< N_i
    double total = 0;   ///< N
};

/// Structures shared by every sampling estimator: one color-aware range tree for
/// SAMP and per-color trees for EVAL.
class sampling_index {
public:
    sampling_index() = default;

    explicit sampling_index(const colored_point_set& pts)
        : pts_(std::make_shared<const colored_point_set>(pts)), tree_(*pts_, true), by_color_(*pts_) {}

    const colored_point_set& points() const noexcept { return *pts_; }
    const range_tree& tree() const noexcept { return tree_; }
    const per_color_trees& color_trees() const noexcept { return by_color_; }
    std::size_t size() const noexcept { return pts_ ? pts_->size() : 0; }

    /// Largest number of draws worth taking before an exact scan is cheaper.
    double sample_cap() const noexcept {
        const double n = std::max<double>(2.0, double(size()));
        return n * std::log2(n);
    }

    /// log2 n with n clamped to at least 2.
    double log_n() const noexcept { return std::log2(std::max<double>(2.0, double(size()))); }

    template <class Archive>
    void save(Archive& ar) const {
        const colored_point_set empty_set;
        const colored_point_set& p = pts_ ? *pts_ : empty_set;
        ar(std::uint64_t(p.dim()), p.raw_coords(), p.raw_colors(), p.raw_weights());
    }

    template <class Archive>
    void load(Archive& ar) {
        std::uint64_t d = 1;
        std::vector<double> coords, weights;
        std::vector<color_id> colors;
        ar(d, coords, colors, weights);
        *this = sampling_index(colored_point_set(std::size_t(d), std::move(coords), std::move(colors), std::move(weights)));
    }

private:
    std::shared_ptr<const colored_point_set> pts_;
    range_tree tree_;
    per_color_trees by_color_;
};

/// SAMP and EVAL for the color distribution of one query range.
class dual_access_oracle {
public:
    dual_access_oracle(const sampling_index& idx, const query_rect& r)
        : idx_(&idx), rect_(r), nodes_(idx.tree().canonical_nodes(r)) {
        for (const auto& v : nodes_) total_ += v.weight;
    }

    double total() const noexcept { return total_; }
    bool empty() const noexcept { return !(total_ > 0); }

    color_id samp(rng_type& rng) const { return idx_->points().color(idx_->tree().sample(nodes_, rng)); }

    color_id samp_excluding(color_id excluded, rng_type& rng) const {
        return idx_->points().color(idx_->tree().sample_excluding(nodes_, excluded, rng));
    }

    /// w(P(c) ∩ R), exact.
    double weight(color_id c) const {
        auto it = cache_.find(c);
        if (it != cache_.end()) return it->second;
        const double w = idx_->color_trees().color_range_count(rect_, c);
        cache_.emplace(c, w);
        return w;
    }

    /// Probability of color c under the range distribution.
    double eval(color_id c) const { return weight(c) / total_; }

    /// Probability of color c once `excluded` is removed from the range.
    double eval_excluding(color_id c, color_id excluded) const { return weight(c) / (total_ - weight(excluded)); }

    /// Exact histogram of the range read from the canonical nodes.
    color_histogram histogram() const {
        color_histogram h;
        for (const auto& v : nodes_)
            for (auto id : idx_->tree().node_points(v)) h.add(idx_->points().color(id), idx_->points().weight(id));
        return h;
    }

private:
    const sampling_index* idx_;
    query_rect rect_;
    std::vector<range_tree::node_ref> nodes_;
    double total_ = 0;
    mutable std::unordered_map<color_id, double> cache_;
};

/// Heavy-branch recombination: the entropy of the whole range given the entropy
/// h_rest of everything except the heavy color.
inline double shannon_heavy_combine(double total, double heavy_weight, double h_rest) {
    const double rest = total - heavy_weight;
    if (rest <= 0) return 0.0;
    return (rest / total) * h_rest + (heavy_weight / total) * std::log2(total / heavy_weight) +
           (rest / total) * std::log2(total / rest);
}

namespace detail {

inline std::size_t additive_shannon_samples(double n, double delta, double c) {
    const double l = std::log2(std::max(2.0, n / delta));
    return static_cast<std::size_t>(std::ceil(c * l * l * std::log2(std::max(2.0, n)) / (delta * delta)));
}

inline void require_open_unit(double v, const char* what) {
    if (!(v > 0 && v < 1)) throw error(error::invalid_argument, what);
}

}  // namespace detail

/// Color holding more than 2/3 of the range weight, searched with
/// ceil(log(2n)/log 3) draws and confirmed by exact evaluation.
inline std::optional<heavy_color> detect_heavy_color(const dual_access_oracle& o, double n, const estimator_config& cfg,
                                                      rng_type& rng, std::size_t* used = nullptr) {
    if (o.empty()) throw error(error::empty_range, "query range holds no weight");
    const auto draws = static_cast<std::size_t>(
        std::ceil(cfg.c_heavy * std::log(2.0 * std::max(1.0, n)) / std::log(3.0)));
    if (used) *used += draws;
    for (std::size_t i = 0; i < draws; ++i) {
        const color_id c = o.samp(rng);
        const double w = o.weight(c);
        if (w * 3.0 > 2.0 * o.total()) return heavy_color{c, w, o.total()};
    }
    return std::nullopt;
}

inline std::optional<heavy_color> detect_heavy_color(const sampling_index& idx, const query_rect& r,
                                                      const estimator_config& cfg, rng_type& rng) {
    return detect_heavy_color(dual_access_oracle(idx, r), double(idx.size()), cfg, rng);
}

namespace detail {

// Mean of log2(1/p) over `draws` colors; with `excluded` set, draws avoid that color
// and p is taken relative to the remaining mass.
inline double plug_in_log_mean(const dual_access_oracle& o, std::size_t draws, rng_type& rng,
                               std::optional<color_id> excluded = std::nullopt) {
    double s = 0;
    for (std::size_t i = 0; i < draws; ++i) {
        if (excluded) {
            const color_id c = o.samp_excluding(*excluded, rng);
            s += -std::log2(o.eval_excluding(c, *excluded));
        } else {
            s += -std::log2(o.eval(o.samp(rng)));
        }
    }
    return draws ? s / double(draws) : 0.0;
}

inline estimate additive_shannon_on(const dual_access_oracle& o, double n, double delta, const estimator_config& cfg,
                                    rng_type& rng, std::optional<color_id> excluded = std::nullopt) {
    estimate out;
    out.summary.kind = entropy_kind::shannon();
    out.summary.count = excluded ? o.total() - o.weight(*excluded) : o.total();
    const std::size_t draws = additive_shannon_samples(n, delta, cfg.c_add);
    const double cap = std::max(2.0, n) * std::log2(std::max(2.0, n));
    if (cfg.exact_fallback && double(draws) > cap) {
        color_histogram h = o.histogram();
        if (excluded) {
            color_histogram rest;
            for (const auto& [c, w] : h.entries())
                if (c != *excluded) rest.add(c, w);
            h = rest;
        }
        out.summary.value = shannon_entropy(h).value;
        out.fallback = true;
        return out;
    }
    out.samples = draws;
    out.summary.value = std::max(0.0, plug_in_log_mean(o, draws, rng, excluded));
    return out;
}

}  // namespace detail

/// Additive estimate: |h - H| <= delta with high probability.
inline estimate estimate_additive(const sampling_index& idx, const query_rect& r, double delta,
                                  const estimator_config& cfg, rng_type& rng) {
    detail::require_open_unit(delta, "delta must lie in (0, 1)");
    dual_access_oracle o(idx, r);
    if (o.empty()) throw error(error::empty_range, "query range holds no weight");
    return detail::additive_shannon_on(o, double(idx.size()), delta, cfg, rng);
}

/// Multiplicative estimate: H/(1+eps) <= h <= (1+eps)H with high probability.
inline estimate estimate_multiplicative(const sampling_index& idx, const query_rect& r, double eps,
                                        const estimator_config& cfg, rng_type& rng) {
    detail::require_open_unit(eps, "epsilon must lie in (0, 1)");
    dual_access_oracle o(idx, r);
    if (o.empty()) throw error(error::empty_range, "query range holds no weight");
    const double n = double(idx.size());
    estimate out;
    out.summary = {entropy_kind::shannon(), o.total(), 0.0};
    std::size_t used = 0;
    const auto heavy = detect_heavy_color(o, n, cfg, rng, &used);
    out.samples = used;
    if (!heavy) {
        const auto draws = static_cast<std::size_t>(
            std::ceil(cfg.c_mult * std::log2(std::max(2.0, n)) / (eps * eps * 0.9)));
        if (cfg.exact_fallback && double(draws) > idx.sample_cap()) {
            out.summary.value = shannon_entropy(o.histogram()).value;
            out.fallback = true;
            return out;
        }
        out.samples += draws;
        out.summary.value = std::max(0.0, detail::plug_in_log_mean(o, draws, rng));
        return out;
    }
    out.heavy = true;
    if (heavy->weight >= heavy->total) return out;
    // Non-heavy remainder at additive accuracy eps/(1+eps).
    const estimate rest = detail::additive_shannon_on(o, n, eps / (1.0 + eps), cfg, rng, heavy->color);
    out.samples += rest.samples;
    out.fallback = rest.fallback;
    out.summary.value = shannon_heavy_combine(heavy->total, heavy->weight, rest.summary.value);
    return out;
}

}  // namespace rqe
