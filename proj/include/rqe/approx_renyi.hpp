#pragma once

#include <cmath>
#include <optional>

#include "rqe/approx_shannon.hpp"
#include "rqe/core.hpp"

namespace rqe {

struct moment_estimate {
    double alpha = 2.0;
    double value = 0;  ///< estimate of sum_i p_i^alpha
    double epsilon = 0;
    std::size_t samples = 0;
    bool fallback = false;
};

enum class renyi_branch { samples_only, dual_access };

namespace detail {

inline double exact_moment(const color_histogram& h, double alpha, std::optional<color_id> excluded = std::nullopt) {
    double total = 0;
    for (const auto& [c, w] : h.entries())
        if (!excluded || c != *excluded) total += w;
    if (!(total > 0)) return 0.0;
    double m = 0;
    for (const auto& [c, w] : h.entries())
        if (!excluded || c != *excluded) m += std::pow(w / total, alpha);
    return m;
}

inline moment_estimate moment_on(const dual_access_oracle& o, double n, double alpha, double eps, std::size_t draws,
                                 const estimator_config& cfg, rng_type& rng, std::optional<color_id> excluded) {
    moment_estimate out{alpha, 0.0, eps, 0, false};
    const double cap = std::max(2.0, n) * std::log2(std::max(2.0, n));
    if (cfg.exact_fallback && double(draws) > cap) {
        out.value = exact_moment(o.histogram(), alpha, excluded);
        out.fallback = true;
        return out;
    }
    double s = 0;
    for (std::size_t i = 0; i < draws; ++i) {
        const double p = excluded ? o.eval_excluding(o.samp_excluding(*excluded, rng), *excluded) : o.eval(o.samp(rng));
        s += std::pow(p, alpha - 1.0);
    }
    out.samples = draws;
    out.value = draws ? s / double(draws) : 0.0;
    return out;
}

inline std::size_t moment_samples(double n, double alpha, double eps, double c) {
    n = std::max(2.0, n);
    return static_cast<std::size_t>(std::ceil(c * alpha * std::pow(n, 1.0 - 1.0 / alpha) * std::log2(n) / (eps * eps)));
}

}  // namespace detail

/// Estimates sum_i p_i^alpha over the colors of the range by averaging
/// EVAL(SAMP())^(alpha-1).
inline moment_estimate estimate_moment(const sampling_index& idx, const query_rect& r, double alpha, double eps,
                                       const estimator_config& cfg, rng_type& rng) {
    detail::require_renyi(alpha);
    detail::require_open_unit(eps, "epsilon must lie in (0, 1)");
    dual_access_oracle o(idx, r);
    if (o.empty()) throw error(error::empty_range, "query range holds no weight");
    const double n = double(idx.size());
    return detail::moment_on(o, n, alpha, eps, detail::moment_samples(n, alpha, eps, cfg.c_mom), cfg, rng, std::nullopt);
}

/// Same moment over the colors other than `excluded`, normalized by their own total.
inline moment_estimate estimate_moment_excluding(const sampling_index& idx, const query_rect& r, double alpha,
                                                 double eps, color_id excluded, const estimator_config& cfg,
                                                 rng_type& rng) {
    detail::require_renyi(alpha);
    detail::require_open_unit(eps, "epsilon must lie in (0, 1)");
    dual_access_oracle o(idx, r);
    if (!(o.total() - o.weight(excluded) > 0)) throw error(error::empty_range, "no weight outside the excluded color");
    const double n = double(idx.size());
    return detail::moment_on(o, n, alpha, eps, detail::moment_samples(n, alpha, eps, cfg.c_mom), cfg, rng, excluded);
}

/// Draw-count factors of the two additive strategies; the smaller one is used.
struct renyi_additive_plan {
    double samples_only_factor = 0;  ///< max{1, 1/(alpha-1)^2} * alpha / delta^2
    double dual_access_factor = 0;   ///< 1 / (1 - 2^((1-alpha) delta))^2
    renyi_branch branch = renyi_branch::dual_access;
};

inline renyi_additive_plan plan_additive_renyi(double alpha, double delta) {
    renyi_additive_plan p;
    const double a1 = alpha - 1.0;
    p.samples_only_factor = std::max(1.0, 1.0 / (a1 * a1)) * alpha / (delta * delta);
    const double g = 1.0 - std::exp2(-a1 * delta);
    p.dual_access_factor = 1.0 / (g * g);
    p.branch = p.dual_access_factor >= p.samples_only_factor ? renyi_branch::samples_only : renyi_branch::dual_access;
    return p;
}

namespace detail {

inline estimate additive_renyi_on(const dual_access_oracle& o, double n, double alpha, double delta,
                                  const estimator_config& cfg, rng_type& rng) {
    const renyi_additive_plan plan = plan_additive_renyi(alpha, delta);
    const double factor = std::min(plan.samples_only_factor, plan.dual_access_factor);
    const double nn = std::max(2.0, n);
    const auto draws = static_cast<std::size_t>(
        std::ceil(cfg.c_mom * factor * std::pow(nn, 1.0 - 1.0 / alpha) * std::log2(nn)));
    const moment_estimate m = moment_on(o, n, alpha, delta, draws, cfg, rng, std::nullopt);
    estimate out;
    out.summary = {entropy_kind{alpha}, o.total(), m.value > 0 ? std::max(0.0, -std::log2(m.value) / (alpha - 1.0)) : 0.0};
    out.samples = m.samples;
    out.fallback = m.fallback;
    return out;
}

}  // namespace detail

/// Additive Renyi estimate: |h - H_alpha| <= delta with high probability.
inline estimate estimate_additive_renyi(const sampling_index& idx, const query_rect& r, double alpha, double delta,
                                        const estimator_config& cfg, rng_type& rng) {
    detail::require_renyi(alpha);
    detail::require_open_unit(delta, "delta must lie in (0, 1)");
    dual_access_oracle o(idx, r);
    if (o.empty()) throw error(error::empty_range, "query range holds no weight");
    return detail::additive_renyi_on(o, double(idx.size()), alpha, delta, cfg, rng);
}

/// Heavy-branch recombination. `rest_moment` is the moment of the non-heavy
/// colors relative to their own total and `full_moment` the moment of the range.
inline double renyi_heavy_combine(double total, double heavy_weight, double alpha, double rest_moment, double full_moment) {
    const double p = heavy_weight / total;
    const double h1 = 1.0 - std::pow(p, alpha);
    const double h2 = rest_moment * std::pow((total - heavy_weight) / total, alpha);
    const double hbar = std::max(0.0, h1 - h2);
    if (!(full_moment > 0)) return 0.0;
    return std::max(0.0, std::log2(hbar / full_moment + 1.0) / (alpha - 1.0));
}

/// Multiplicative Renyi estimate: H/(1+eps) <= h <= (1+eps)H with high probability.
inline estimate estimate_multiplicative_renyi(const sampling_index& idx, const query_rect& r, double alpha, double eps,
                                              const estimator_config& cfg, rng_type& rng) {
    detail::require_renyi(alpha);
    detail::require_open_unit(eps, "epsilon must lie in (0, 1)");
    dual_access_oracle o(idx, r);
    if (o.empty()) throw error(error::empty_range, "query range holds no weight");
    const double n = double(idx.size());
    estimate out;
    out.summary = {entropy_kind{alpha}, o.total(), 0.0};
    std::size_t used = 0;
    const auto heavy = detect_heavy_color(o, n, cfg, rng, &used);
    if (!heavy) {
        estimate add = detail::additive_renyi_on(o, n, alpha, std::log2(1.5) * eps / (1.0 + eps), cfg, rng);
        add.samples += used;
        return add;
    }
    out.heavy = true;
    out.samples = used;
    if (heavy->weight >= heavy->total) return out;
    const double eps0 = eps / cfg.c1;
    const double eps1 = eps0 / 3.0;
    const double eps2 = alpha <= 2.0 ? (alpha - 1.0) * eps1 / cfg.c2 : eps1 / cfg.c2;
    const moment_estimate rest =
        detail::moment_on(o, n, alpha, eps2, detail::moment_samples(n, alpha, eps2, cfg.c_mom), cfg, rng, heavy->color);
    const moment_estimate full =
        detail::moment_on(o, n, alpha, eps1, detail::moment_samples(n, alpha, eps1, cfg.c_mom), cfg, rng, std::nullopt);
    out.samples += rest.samples + full.samples;
    out.fallback = rest.fallback || full.fallback;
    out.summary.value = renyi_heavy_combine(heavy->total, heavy->weight, alpha, rest.value, full.value);
    return out;
}

}  // namespace rqe
