#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace rqe {

class error : public std::runtime_error {
public:
    enum code {
        invalid_order,
        invalid_weight,
        underflow,
        empty_range,
        order_not_indexed,
        too_many_buckets,
        dimension_mismatch,
        invalid_argument,
        data_error,
        not_an_index,
        unsupported_version,
        index_kind_mismatch
    };

    error(code c, const std::string& what) : std::runtime_error(what), code_(c) {}

    code which() const noexcept { return code_; }

private:
    code code_;
};

using color_id = std::uint32_t;

/// One input point; coordinates are copied into the owning set on insertion.
struct point {
    std::vector<double> coords;
    color_id color = 0;
    double weight = 1.0;
};

/// Immutable d-dimensional colored point set with flat coordinate storage.
class colored_point_set {
public:
    colored_point_set() = default;

    colored_point_set(std::size_t dim, const std::vector<point>& pts) : dim_(dim) {
        if (dim == 0) throw error(error::dimension_mismatch, "dimension must be at least 1");
        coords_.reserve(pts.size() * dim);
        colors_.reserve(pts.size());
        weights_.reserve(pts.size());
        for (const point& p : pts) push(p.coords.data(), p.coords.size(), p.color, p.weight);
    }

    colored_point_set(std::size_t dim, std::vector<double> coords, std::vector<color_id> colors,
                      std::vector<double> weights)
        : dim_(dim), coords_(std::move(coords)), colors_(std::move(colors)), weights_(std::move(weights)) {
        if (dim == 0) throw error(error::dimension_mismatch, "dimension must be at least 1");
        if (coords_.size() != colors_.size() * dim || weights_.size() != colors_.size())
            throw error(error::dimension_mismatch, "coordinate/color/weight arrays disagree in length");
        for (std::size_t i = 0; i < colors_.size(); ++i) check(&coords_[i * dim], colors_[i], weights_[i]);
    }

    std::size_t size() const noexcept { return colors_.size(); }
    bool empty() const noexcept { return colors_.empty(); }
    std::size_t dim() const noexcept { return dim_; }
    std::size_t num_colors() const noexcept { return num_colors_; }

    double coord(std::size_t i, std::size_t k) const noexcept { return coords_[i * dim_ + k]; }
    const double* coords(std::size_t i) const noexcept { return &coords_[i * dim_]; }
    color_id color(std::size_t i) const noexcept { return colors_[i]; }
    double weight(std::size_t i) const noexcept { return weights_[i]; }

    bool unit_weights() const noexcept {
        return std::all_of(weights_.begin(), weights_.end(), [](double w) { return w == 1.0; });
    }

    double total_weight() const noexcept {
        double s = 0;
        for (double w : weights_) s += w;
        return s;
    }

    const std::vector<double>& raw_coords() const noexcept { return coords_; }
    const std::vector<color_id>& raw_colors() const noexcept { return colors_; }
    const std::vector<double>& raw_weights() const noexcept { return weights_; }

    /// The 1-D set obtained by keeping only axis `k`.
    colored_point_set project(std::size_t k) const {
        if (k >= dim_) throw error(error::dimension_mismatch, "projection axis out of range");
        std::vector<double> c(size());
        for (std::size_t i = 0; i < size(); ++i) c[i] = coord(i, k);
        return colored_point_set(1, std::move(c), colors_, weights_);
    }

private:
    void check(const double* c, color_id col, double w) {
        for (std::size_t k = 0; k < dim_; ++k)
            if (!std::isfinite(c[k])) throw error(error::data_error, "non-finite coordinate");
        if (!(w >= 0) || !std::isfinite(w)) throw error(error::invalid_weight, "weight must be finite and nonnegative");
        num_colors_ = std::max<std::size_t>(num_colors_, std::size_t(col) + 1);
    }

    void push(const double* c, std::size_t d, color_id col, double w) {
        if (d != dim_) throw error(error::dimension_mismatch, "point dimension differs from set dimension");
        check(c, col, w);
        coords_.insert(coords_.end(), c, c + d);
        colors_.push_back(col);
        weights_.push_back(w);
    }

    std::size_t dim_ = 1;
    std::size_t num_colors_ = 0;
    std::vector<double> coords_;
    std::vector<color_id> colors_;
    std::vector<double> weights_;
};

/// Total weight per color inside some subset. Zero entries are never stored.
class color_histogram {
public:
    color_histogram() = default;

    color_histogram(std::initializer_list<std::pair<const color_id, double>> init) {
        for (const auto& [c, w] : init) add(c, w);
    }

    void add(color_id c, double w) {
        if (!(w >= 0) || !std::isfinite(w)) throw error(error::invalid_weight, "histogram weight must be nonnegative");
        if (w == 0) return;
        entries_[c] += w;
        total_ += w;
    }

    const std::map<color_id, double>& entries() const noexcept { return entries_; }
    double total() const noexcept { return total_; }
    std::size_t distinct() const noexcept { return entries_.size(); }
    bool empty() const noexcept { return entries_.empty(); }

    double at(color_id c) const {
        auto it = entries_.find(c);
        return it == entries_.end() ? 0.0 : it->second;
    }

private:
    std::map<color_id, double> entries_;
    double total_ = 0;
};

/// Entropy order: alpha == 1 denotes Shannon, alpha > 1 denotes Renyi.
struct entropy_kind {
    double alpha = 1.0;

    static entropy_kind shannon() noexcept { return {1.0}; }

    static entropy_kind renyi(double a) {
        if (!(a > 1.0) || !std::isfinite(a)) throw error(error::invalid_order, "Renyi order must exceed 1");
        return {a};
    }

    bool is_shannon() const noexcept { return alpha == 1.0; }

    std::string name() const {
        if (is_shannon()) return "shannon";
        return "renyi";
    }

    friend bool operator==(entropy_kind a, entropy_kind b) noexcept { return a.alpha == b.alpha; }
};

struct entropy_summary {
    entropy_kind kind;
    double count = 0;  ///< total weight N
    double value = 0;  ///< entropy in bits
};

namespace detail {

inline double clamp_entropy(double v) noexcept { return v < 0 ? 0.0 : v; }

inline void require_renyi(double alpha) {
    if (!(alpha > 1.0) || !std::isfinite(alpha)) throw error(error::invalid_order, "Renyi order must exceed 1");
}

/// x * log2(y / x) with the 0 log 0 = 0 convention.
inline double xlog(double x, double y) noexcept { return x > 0 ? x * std::log2(y / x) : 0.0; }

}  // namespace detail

inline entropy_summary shannon_entropy(const color_histogram& h) {
    entropy_summary s{entropy_kind::shannon(), h.total(), 0.0};
    if (h.distinct() <= 1) return s;
    const double n = h.total();
    double v = 0;
    for (const auto& [c, w] : h.entries()) v += (w / n) * std::log2(n / w);
    s.value = detail::clamp_entropy(v);
    return s;
}

inline entropy_summary renyi_entropy(const color_histogram& h, double alpha) {
    detail::require_renyi(alpha);
    entropy_summary s{entropy_kind{alpha}, h.total(), 0.0};
    if (h.distinct() <= 1) return s;
    const double n = h.total();
    double m = 0;
    for (const auto& [c, w] : h.entries()) m += std::pow(w / n, alpha);
    s.value = detail::clamp_entropy(std::log2(1.0 / m) / (alpha - 1.0));
    return s;
}

inline entropy_summary entropy(const color_histogram& h, entropy_kind k) {
    return k.is_shannon() ? shannon_entropy(h) : renyi_entropy(h, k.alpha);
}

/// The power sum sum_i N_i^alpha recovered from a Renyi summary.
inline double renyi_power_sum(const entropy_summary& s) {
    if (s.count <= 0) return 0.0;
    return std::pow(s.count, s.kind.alpha) * std::exp2((1.0 - s.kind.alpha) * s.value);
}

/// Inverse of renyi_power_sum.
inline double renyi_from_power_sum(double count, double power_sum, double alpha) {
    if (count <= 0 || power_sum <= 0) return 0.0;
    return detail::clamp_entropy((alpha * std::log2(count) - std::log2(power_sum)) / (alpha - 1.0));
}

inline entropy_summary merge_shannon(const entropy_summary& a, const entropy_summary& b) {
    if (a.count <= 0) return b;
    if (b.count <= 0) return a;
    const double n = a.count + b.count;
    const double v = (a.count * a.value + b.count * b.value + detail::xlog(a.count, n) + detail::xlog(b.count, n)) / n;
    return {entropy_kind::shannon(), n, detail::clamp_entropy(v)};
}

inline entropy_summary insert_color_shannon(const entropy_summary& h, double added_weight) {
    if (!(added_weight > 0)) throw error(error::invalid_weight, "inserted weight must be positive");
    if (h.count <= 0) return {entropy_kind::shannon(), added_weight, 0.0};
    const double n1 = h.count, n = n1 + added_weight;
    const double v = (n1 / n) * h.value + (n1 / n) * std::log2(n / n1) + (added_weight / n) * std::log2(n / added_weight);
    return {entropy_kind::shannon(), n, detail::clamp_entropy(v)};
}

inline entropy_summary delete_color_shannon(const entropy_summary& h, double removed_weight) {
    if (!(removed_weight > 0)) throw error(error::invalid_weight, "removed weight must be positive");
    if (removed_weight >= h.count) throw error(error::underflow, "removed weight must be below the total");
    const double n1 = h.count, rest = n1 - removed_weight;
    const double v = (n1 / rest) * (h.value - (removed_weight / n1) * std::log2(n1 / removed_weight) -
                                    (rest / n1) * std::log2(n1 / rest));
    return {entropy_kind::shannon(), rest, detail::clamp_entropy(v)};
}

inline entropy_summary merge_renyi(const entropy_summary& a, const entropy_summary& b, double alpha) {
    detail::require_renyi(alpha);
    if (a.count <= 0) return {entropy_kind{alpha}, b.count, b.value};
    if (b.count <= 0) return {entropy_kind{alpha}, a.count, a.value};
    const double n = a.count + b.count;
    const double denom = std::pow(a.count, alpha) * std::exp2((1 - alpha) * a.value) +
                         std::pow(b.count, alpha) * std::exp2((1 - alpha) * b.value);
    return {entropy_kind{alpha}, n, renyi_from_power_sum(n, denom, alpha)};
}

inline entropy_summary insert_color_renyi(const entropy_summary& h, double added_weight, double alpha) {
    detail::require_renyi(alpha);
    if (!(added_weight > 0)) throw error(error::invalid_weight, "inserted weight must be positive");
    if (h.count <= 0) return {entropy_kind{alpha}, added_weight, 0.0};
    const double n = h.count + added_weight;
    const double denom = std::pow(h.count, alpha) * std::exp2((1 - alpha) * h.value) + std::pow(added_weight, alpha);
    return {entropy_kind{alpha}, n, renyi_from_power_sum(n, denom, alpha)};
}

inline entropy_summary delete_color_renyi(const entropy_summary& h, double removed_weight, double alpha) {
    detail::require_renyi(alpha);
    if (!(removed_weight > 0)) throw error(error::invalid_weight, "removed weight must be positive");
    if (removed_weight >= h.count) throw error(error::underflow, "removed weight must be below the total");
    const double rest = h.count - removed_weight;
    const double denom = std::pow(h.count, alpha) * std::exp2((1 - alpha) * h.value) - std::pow(removed_weight, alpha);
    return {entropy_kind{alpha}, rest, renyi_from_power_sum(rest, denom, alpha)};
}

// Kind-dispatching forms used by the indexes.

inline entropy_summary merge(const entropy_summary& a, const entropy_summary& b, entropy_kind k) {
    return k.is_shannon() ? merge_shannon(a, b) : merge_renyi(a, b, k.alpha);
}

inline entropy_summary insert_color(const entropy_summary& h, double w, entropy_kind k) {
    return k.is_shannon() ? insert_color_shannon(h, w) : insert_color_renyi(h, w, k.alpha);
}

inline entropy_summary delete_color(const entropy_summary& h, double w, entropy_kind k) {
    return k.is_shannon() ? delete_color_shannon(h, w) : delete_color_renyi(h, w, k.alpha);
}

/// Changes the weight of one color already present in `h` from `old_w` to `new_w`
/// by a delete followed by an insert. A color owning all of `h` collapses to a
/// single-color summary.
inline entropy_summary replace_color(const entropy_summary& h, double old_w, double new_w, entropy_kind k) {
    if (old_w <= 0) return new_w > 0 ? insert_color(h, new_w, k) : h;
    const double rest = h.count - old_w;
    if (rest <= h.count * 1e-12) {
        if (new_w <= 0) return {k, 0.0, 0.0};
        return {k, new_w, 0.0};
    }
    entropy_summary without = delete_color(h, old_w, k);
    return new_w > 0 ? insert_color(without, new_w, k) : without;
}

/// Expected entropy (|S| / n) * H(S) of a subset S of an n-point universe.
inline double expected_entropy(const entropy_summary& s, double universe) {
    return universe > 0 ? (s.count / universe) * s.value : 0.0;
}

}  // namespace rqe
