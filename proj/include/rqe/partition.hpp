#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <numeric>
#include <unordered_map>
#include <vector>

#include "rqe/core.hpp"
#include "rqe/rangetree.hpp"

namespace rqe {

/// Any range-entropy source: oracle, exact index or estimator.
using range_backend = std::function<entropy_summary(const query_rect&)>;

enum class objective { min, max };

struct bucketing_1d {
    std::size_t k = 0;
    std::vector<std::size_t> cuts;  ///< 0 = c_0 < c_1 < ... < c_k = n, rank positions
    std::vector<double> scores;     ///< expected entropy per bucket
    double value = 0;               ///< max (MaxPart) or sum (SumPart) of the scores
    std::size_t evaluations = 0;    ///< backend calls
};

/// Replaces the coordinates of a one-dimensional set by their ranks 0..n-1
/// (ties keep input order), so buckets map to integer intervals.
inline colored_point_set rank_points(const colored_point_set& pts) {
    if (pts.dim() != 1) throw error(error::dimension_mismatch, "rank_points needs one-dimensional points");
    std::vector<std::uint32_t> order(pts.size());
    std::iota(order.begin(), order.end(), 0u);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::uint32_t a, std::uint32_t b) { return pts.coord(a, 0) < pts.coord(b, 0); });
    std::vector<point> out;
    out.reserve(order.size());
    for (std::size_t i = 0; i < order.size(); ++i) out.push_back({{double(i)}, pts.color(order[i]), pts.weight(order[i])});
    return colored_point_set(1, out);
}

/// Expected entropy of rank interval [i, j) through a backend, memoized.
class interval_error {
public:
    interval_error(std::size_t n, double total, range_backend backend)
        : n_(n), total_(total), backend_(std::move(backend)) {}

    std::size_t size() const noexcept { return n_; }
    std::size_t evaluations() const noexcept { return calls_; }

    double operator()(std::size_t i, std::size_t j) const {
        if (j <= i + 1) return 0.0;
        const std::uint64_t key = (std::uint64_t(i) << 32) | j;
        auto it = memo_.find(key);
        if (it != memo_.end()) return it->second;
        ++calls_;
        const entropy_summary s = backend_(query_rect::interval(double(i), double(j - 1)));
        const double v = expected_entropy(s, total_);
        memo_.emplace(key, v);
        return v;
    }

private:
    std::size_t n_;
    double total_;
    range_backend backend_;
    mutable std::unordered_map<std::uint64_t, double> memo_;
    mutable std::size_t calls_ = 0;
};

namespace detail {

inline void require_buckets(std::size_t k, std::size_t n) {
    if (k == 0 || k > n) throw error(error::too_many_buckets, "bucket count must lie in [1, n]");
}

inline bucketing_1d finish(const interval_error& e, std::vector<std::size_t> cuts, bool sum) {
    bucketing_1d b;
    b.k = cuts.size() - 1;
    b.cuts = std::move(cuts);
    for (std::size_t j = 0; j < b.k; ++j) {
        const double s = e(b.cuts[j], b.cuts[j + 1]);
        b.scores.push_back(s);
        b.value = sum ? b.value + s : std::max(b.value, s);
    }
    b.evaluations = e.evaluations();
    return b;
}

}  // namespace detail

enum class dp_search { binary, linear };

/// Exact MaxPart on a rank sequence of length n: dp[j][i] is the best maximum
/// over prefix [0, i) with j buckets. The prefix optimum grows with i and the
/// last bucket's error shrinks as its start moves right, so the best split is
/// the crossing point of the two and is found by binary search.
inline bucketing_1d maxpart_dp(const interval_error& e, std::size_t k, dp_search search = dp_search::binary) {
    const std::size_t n = e.size();
    detail::require_buckets(k, n);
    constexpr double inf = std::numeric_limits<double>::infinity();
    std::vector<std::vector<double>> dp(k + 1, std::vector<double>(n + 1, inf));
    std::vector<std::vector<std::size_t>> arg(k + 1, std::vector<std::size_t>(n + 1, 0));
    for (std::size_t i = 1; i <= n; ++i) dp[1][i] = e(0, i);
    for (std::size_t j = 2; j <= k; ++j) {
        for (std::size_t i = j; i <= n; ++i) {
            // last bucket [p, i) with p in [j-1, i-1]
            std::size_t lo = j - 1, hi = i - 1;
            auto cost = [&](std::size_t p) { return std::max(dp[j - 1][p], e(p, i)); };
            std::size_t best = lo;
            if (search == dp_search::linear) {
                for (std::size_t p = lo; p <= hi; ++p)
                    if (cost(p) < cost(best)) best = p;
            } else {
                // first p where the prefix term dominates
                std::size_t a = lo, b = hi + 1;
                while (a < b) {
                    const std::size_t m = a + (b - a) / 2;
                    if (dp[j - 1][m] >= e(m, i)) b = m;
                    else a = m + 1;
                }
                best = a <= hi ? a : hi;
                if (a > lo && cost(a - 1) <= cost(best)) best = a - 1;
            }
            dp[j][i] = cost(best);
            arg[j][i] = best;
        }
    }
    std::vector<std::size_t> cuts(k + 1);
    cuts[k] = n;
    for (std::size_t j = k, i = n; j >= 2; --j) {
        i = arg[j][i];
        cuts[j - 1] = i;
    }
    cuts[0] = 0;
    return detail::finish(e, std::move(cuts), false);
}

namespace detail {

// Greedy cover with buckets of error at most `cap`; each bucket is grown by
// binary search on its end. Returns the cuts, stopping early past `limit` buckets.
inline std::vector<std::size_t> greedy_cover(const interval_error& e, double cap, std::size_t limit) {
    const std::size_t n = e.size();
    std::vector<std::size_t> cuts{0};
    std::size_t p = 0;
    while (p < n && cuts.size() <= limit + 1) {
        std::size_t a = p + 1, b = n;  // largest end with error <= cap
        while (a < b) {
            const std::size_t m = a + (b - a + 1) / 2;
            if (e(p, m) <= cap) a = m;
            else b = m - 1;
        }
        cuts.push_back(a);
        p = a;
    }
    return cuts;
}

// Splits the widest buckets until there are exactly k.
inline void refine_to(std::vector<std::size_t>& cuts, std::size_t k) {
    while (cuts.size() - 1 < k) {
        std::size_t widest = 0;
        for (std::size_t j = 1; j + 1 < cuts.size(); ++j)
            if (cuts[j + 1] - cuts[j] > cuts[widest + 1] - cuts[widest]) widest = j;
        cuts.insert(cuts.begin() + std::ptrdiff_t(widest) + 1, cuts[widest + 1] - 1);
    }
}

}  // namespace detail

/// Bounds of the search range for MaxPart values: the smallest nonzero expected
/// entropy any bucket can have (attained by some pair of adjacent points of
/// different colors, by monotonicity) and the error of the whole sequence.
struct maxpart_range {
    double low = 0, high = 0;
};

inline maxpart_range maxpart_search_range(const interval_error& e) {
    maxpart_range r;
    r.low = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i + 2 <= e.size(); ++i) {
        const double v = e(i, i + 2);
        if (v > 0) r.low = std::min(r.low, v);
    }
    r.high = e(0, e.size());
    if (!std::isfinite(r.low)) r.low = r.high;
    return r;
}

/// (1+eps)-approximate MaxPart: binary search over the geometric grid
/// low*(1+eps)^q for the smallest value the greedy cover achieves with k buckets.
inline bucketing_1d maxpart_approx(const interval_error& e, std::size_t k, double eps) {
    const std::size_t n = e.size();
    detail::require_buckets(k, n);
    if (!(eps > 0)) throw error(error::invalid_argument, "epsilon must be positive");
    auto feasible = [&](double cap, std::vector<std::size_t>& cuts) {
        cuts = detail::greedy_cover(e, cap, k);
        return cuts.back() == n && cuts.size() - 1 <= k;
    };
    std::vector<std::size_t> cuts;
    if (!feasible(0.0, cuts)) {
        const maxpart_range range = maxpart_search_range(e);
        std::size_t q_hi = 0;
        while (range.low * std::pow(1.0 + eps, double(q_hi)) < range.high) ++q_hi;
        std::size_t a = 0, b = q_hi;
        std::vector<std::size_t> trial;
        while (a < b) {
            const std::size_t m = a + (b - a) / 2;
            if (feasible(range.low * std::pow(1.0 + eps, double(m)), trial)) b = m;
            else a = m + 1;
        }
        feasible(range.low * std::pow(1.0 + eps, double(a)), cuts);
        if (cuts.back() != n || cuts.size() - 1 > k) cuts = detail::greedy_cover(e, range.high, k);
    }
    detail::refine_to(cuts, k);
    return detail::finish(e, std::move(cuts), false);
}

/// (1+eps)-approximate SumPart. Row j keeps, for each prefix, an approximate
/// optimum with j buckets; before moving to row j+1 the prefixes are grouped
/// into runs whose values stay within a (1+delta) factor of the run's first
/// value, and only the last index of each run is tried as a split point.
inline bucketing_1d sumpart_approx(const interval_error& e, std::size_t k, double eps) {
    const std::size_t n = e.size();
    detail::require_buckets(k, n);
    if (!(eps > 0)) throw error(error::invalid_argument, "epsilon must be positive");
    const double delta = eps / (2.0 * double(k));
    constexpr double inf = std::numeric_limits<double>::infinity();
    std::vector<std::vector<double>> a(k + 1, std::vector<double>(n + 1, inf));
    std::vector<std::vector<std::size_t>> arg(k + 1, std::vector<std::size_t>(n + 1, 0));
    for (std::size_t i = 1; i <= n; ++i) a[1][i] = e(0, i);
    for (std::size_t j = 2; j <= k; ++j) {
        std::vector<std::size_t> cand;
        double run_min = inf;
        for (std::size_t p = j - 1; p <= n - 1; ++p) {
            const double v = a[j - 1][p];
            if (cand.empty() || v > (1.0 + delta) * run_min) {
                cand.push_back(p);
                run_min = v;
            } else {
                cand.back() = p;
            }
        }
        for (std::size_t i = j; i <= n; ++i) {
            auto relax = [&](std::size_t p) {
                const double v = a[j - 1][p] + e(p, i);
                if (v < a[j][i]) {
                    a[j][i] = v;
                    arg[j][i] = p;
                }
            };
            for (std::size_t p : cand) {
                if (p >= i) break;
                relax(p);
            }
            // i-1 stands in for the run that i cuts through
            relax(i - 1);
        }
    }
    std::vector<std::size_t> cuts(k + 1);
    cuts[k] = n;
    for (std::size_t j = k, i = n; j >= 2; --j) {
        i = arg[j][i];
        cuts[j - 1] = i;
    }
    cuts[0] = 0;
    return detail::finish(e, std::move(cuts), true);
}

// ---------------------------------------------------------------------------
// Greedy splitting in any dimension.

struct tree_partition {
    struct node {
        query_rect rect;
        std::vector<std::uint32_t> ids;
        std::int64_t parent = -1, left = -1, right = -1;
        std::size_t depth = 0;
        double score = 0;
        bool splittable = false;
    };

    struct step {
        std::size_t split = 0;                                 ///< node id that was split
        std::vector<std::pair<std::size_t, double>> candidates; ///< splittable leaves and scores at that moment
    };

    std::vector<node> nodes;
    std::vector<step> trace;
    double total = 0;

    std::vector<std::size_t> leaves() const {
        std::vector<std::size_t> out;
        for (std::size_t i = 0; i < nodes.size(); ++i)
            if (nodes[i].left < 0) out.push_back(i);
        return out;
    }
};

namespace detail {

// Median split value for `ids` along dimension k; false when all coordinates agree.
inline bool median_cut(const colored_point_set& pts, const std::vector<std::uint32_t>& ids, std::size_t k, double& cut) {
    std::vector<double> xs;
    xs.reserve(ids.size());
    for (auto id : ids) xs.push_back(pts.coord(id, k));
    std::sort(xs.begin(), xs.end());
    if (xs.empty() || xs.front() == xs.back()) return false;
    cut = xs[(xs.size() - 1) / 2];
    if (cut == xs.back()) cut = *(std::lower_bound(xs.begin(), xs.end(), xs.back()) - 1);
    return true;
}

}  // namespace detail

/// Repeatedly splits the leaf with the smallest (or largest) expected entropy at
/// the median of the coordinate chosen by depth, until k leaves exist. Ties go
/// to the leaf created first.
inline tree_partition greedy_tree_split(const colored_point_set& pts, std::size_t k, objective obj,
                                        const range_backend& backend) {
    detail::require_buckets(k, pts.size());
    const std::size_t d = pts.dim();
    tree_partition t;
    t.total = pts.total_weight();
    auto score = [&](const query_rect& r) { return expected_entropy(backend(r), t.total); };
    auto prepare = [&](tree_partition::node& v) {
        v.score = score(v.rect);
        double cut = 0;
        v.splittable = false;
        for (std::size_t s = 0; s < d && !v.splittable; ++s) v.splittable = detail::median_cut(pts, v.ids, s, cut);
    };

    tree_partition::node root;
    root.rect = query_rect::everything(d);
    root.ids.resize(pts.size());
    std::iota(root.ids.begin(), root.ids.end(), 0u);
    prepare(root);
    t.nodes.push_back(std::move(root));

    for (std::size_t leaves = 1; leaves < k; ++leaves) {
        tree_partition::step st;
        std::int64_t pick = -1;
        for (std::size_t i = 0; i < t.nodes.size(); ++i) {
            const auto& v = t.nodes[i];
            if (v.left >= 0 || !v.splittable) continue;
            st.candidates.emplace_back(i, v.score);
            if (pick < 0) {
                pick = std::int64_t(i);
                continue;
            }
            const double best = t.nodes[std::size_t(pick)].score;
            if (obj == objective::min ? v.score < best : v.score > best) pick = std::int64_t(i);
        }
        if (pick < 0) throw error(error::too_many_buckets, "no leaf can be split further");
        st.split = std::size_t(pick);
        t.trace.push_back(std::move(st));

        const std::size_t depth = t.nodes[std::size_t(pick)].depth;
        const query_rect rect = t.nodes[std::size_t(pick)].rect;
        const std::vector<std::uint32_t> ids = t.nodes[std::size_t(pick)].ids;
        std::size_t dim = 0;
        double cut = 0;
        for (std::size_t s = 0; s < d; ++s) {
            dim = (depth + s) % d;
            if (detail::median_cut(pts, ids, dim, cut)) break;
        }
        tree_partition::node lo, hi;
        lo.rect = rect;
        hi.rect = rect;
        lo.rect.hi[dim] = cut;
        hi.rect.lo[dim] = std::nextafter(cut, std::numeric_limits<double>::infinity());
        for (auto id : ids) (pts.coord(id, dim) <= cut ? lo.ids : hi.ids).push_back(id);
        lo.parent = hi.parent = pick;
        lo.depth = hi.depth = depth + 1;
        prepare(lo);
        prepare(hi);
        t.nodes[std::size_t(pick)].left = std::int64_t(t.nodes.size());
        t.nodes.push_back(std::move(lo));
        t.nodes[std::size_t(pick)].right = std::int64_t(t.nodes.size());
        t.nodes.push_back(std::move(hi));
    }
    return t;
}

}  // namespace rqe
