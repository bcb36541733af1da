#pragma once

// Decision-theoretic cutoff selection: weighted misclassification risk, its
// derivative (the estimating equation), admissible-interval construction with
// bracketing verification, root-finding for the optimal threshold, the local
// slope diagnostic, and the Youden-displacement expansion.

#include <algorithm>
#include <cmath>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "rocsmsn/distributions.hpp"
#include "rocsmsn/numerics.hpp"
#include "rocsmsn/roc.hpp"

namespace rocsmsn {

struct DecisionConfig {
    double lambda0 = 1.0;  // cost of a false positive
    double lambda1 = 1.0;  // cost of a false negative
    double pi0 = 0.5;      // prevalence of the non-diseased group
    double pi1 = 0.5;

    void validate() const {
        if (!(lambda0 > 0.0) || !(lambda1 > 0.0) || !(pi0 > 0.0) || !(pi1 > 0.0) ||
            !(pi0 < 1.0) || !(pi1 < 1.0)) {
            throw std::invalid_argument("DecisionConfig: costs and prevalences must be positive");
        }
        if (std::fabs(pi0 + pi1 - 1.0) > 1e-12) {
            throw std::invalid_argument("DecisionConfig: prevalences must sum to one");
        }
    }

    double target_ratio() const { return lambda0 * pi0 / (lambda1 * pi1); }
};

// Expected weighted misclassification risk of the rule "positive iff x > c".
inline double risk(const ThetaPair& theta, const DecisionConfig& cfg, double c) {
    cfg.validate();
    return cfg.lambda1 * cfg.pi1 * cdf(theta.d1, c) +
           cfg.lambda0 * cfg.pi0 * (1.0 - cdf(theta.d0, c));
}

// Derivative of the risk in c; its root is the optimal threshold.
inline double phi(const ThetaPair& theta, const DecisionConfig& cfg, double c) {
    return cfg.lambda1 * cfg.pi1 * pdf(theta.d1, c) -
           cfg.lambda0 * cfg.pi0 * pdf(theta.d0, c);
}

struct AdmissibleInterval {
    double a = 0.0, b = 0.0;
    bool bracketed = false;
    int expansions = 0;
    bool degenerate = false;  // phi vanishes identically on the scan grid
};

namespace detail {

// Verify phi(a) < 0 < phi(b); widen the half-width by 1.5x per step (max 20)
// until the signs come out right.  Never throws: bracketed=false signals
// failure, with a degeneracy flag when phi has no sign structure at all.
inline AdmissibleInterval verify_bracket(const ThetaPair& theta,
                                         const DecisionConfig& cfg, double a,
                                         double b) {
    AdmissibleInterval out;
    out.a = a;
    out.b = b;
    const double mid = 0.5 * (a + b);
    double half = 0.5 * (b - a);
    for (int step = 0; step <= 20; ++step) {
        out.a = mid - half;
        out.b = mid + half;
        if (phi(theta, cfg, out.a) < 0.0 && phi(theta, cfg, out.b) > 0.0) {
            out.bracketed = true;
            out.expansions = step;
            return out;
        }
        half *= 1.5;
    }
    out.expansions = 20;
    double max_abs = 0.0;
    for (int i = 0; i <= 64; ++i) {
        max_abs = std::max(max_abs,
                           std::fabs(phi(theta, cfg, out.a + (out.b - out.a) * i / 64.0)));
    }
    out.degenerate = max_abs < 1e-12;
    return out;
}

}  // namespace detail

// Model-quantile admissible interval: spans the central effective range of
// both fitted laws (per-group alpha_tail/2-style quantiles at alpha_tail and
// 1 - alpha_tail), then verified/widened for bracketing.
inline AdmissibleInterval admissible_interval(const ThetaPair& theta,
                                              const DecisionConfig& cfg,
                                              double alpha_tail = 0.01) {
    if (!(alpha_tail > 0.0 && alpha_tail < 0.5)) {
        throw std::invalid_argument("admissible_interval: alpha_tail outside (0, 0.5)");
    }
    cfg.validate();
    const double lo = 0.5 * alpha_tail;
    const double hi = 1.0 - lo;
    const double a = std::min(quantile(theta.d0, lo), quantile(theta.d1, lo));
    const double b = std::max(quantile(theta.d0, hi), quantile(theta.d1, hi));
    return detail::verify_bracket(theta, cfg, a, b);
}

// Data-quantile variant: endpoints from pooled-sample percentiles.
inline AdmissibleInterval admissible_interval_empirical(
    std::span<const double> pooled, const ThetaPair& theta,
    const DecisionConfig& cfg, double lo = 0.005, double hi = 0.995) {
    if (pooled.empty()) {
        throw std::invalid_argument("admissible_interval_empirical: empty sample");
    }
    if (!(lo > 0.0 && lo < hi && hi < 1.0)) {
        throw std::invalid_argument("admissible_interval_empirical: bad percentile pair");
    }
    cfg.validate();
    std::vector<double> s(pooled.begin(), pooled.end());
    std::sort(s.begin(), s.end());
    auto pct = [&](double p) {
        // Linear interpolation between order statistics.
        const double pos = p * (s.size() - 1);
        const std::size_t i = static_cast<std::size_t>(pos);
        if (i + 1 >= s.size()) return s.back();
        return s[i] + (pos - i) * (s[i + 1] - s[i]);
    };
    return detail::verify_bracket(theta, cfg, pct(lo), pct(hi));
}

// |d phi / dc| by Richardson extrapolation with step 1e-4 (1 + |c|).
inline double slope_diagnostic(const ThetaPair& theta, const DecisionConfig& cfg,
                               double c) {
    auto f = [&](double x) { return phi(theta, cfg, x); };
    return std::fabs(richardson_derivative(f, c, 1e-4 * (1.0 + std::fabs(c))));
}

struct CutoffResult {
    double c_star = 0.0;
    double risk_at_c_star = 0.0;
    double c_youden = 0.0;
    double risk_at_youden = 0.0;
    std::optional<double> c_youden_emp;
    std::optional<double> risk_at_youden_emp;
    double slope_diag = 0.0;
    double target_ratio = 1.0;
    AdmissibleInterval interval;
    bool multi_root = false;
    YoudenResult youden;  // parametric detail, including the interior flag
};

inline CutoffResult optimal_cutoff(const ThetaPair& theta, const DecisionConfig& cfg,
                                   const AdmissibleInterval& interval) {
    cfg.validate();
    if (!interval.bracketed) {
        throw std::invalid_argument(
            interval.degenerate
                ? "optimal_cutoff: estimating equation degenerate (identical groups?)"
                : "optimal_cutoff: interval does not bracket the optimum");
    }
    auto f = [&](double c) { return phi(theta, cfg, c); };
    const auto root = find_root(f, interval.a, interval.b, 1e-10, 1e-10, 300);

    CutoffResult out;
    out.c_star = root.x;
    out.risk_at_c_star = risk(theta, cfg, out.c_star);
    out.target_ratio = cfg.target_ratio();
    out.interval = interval;
    out.slope_diag = slope_diagnostic(theta, cfg, out.c_star);

    // Uniqueness diagnostic: count sign changes on a 256-point grid.
    int sign_changes = 0;
    double prev = f(interval.a);
    for (int i = 1; i <= 256; ++i) {
        const double x = interval.a + (interval.b - interval.a) * i / 256.0;
        const double v = f(x);
        if ((prev <= 0.0) != (v <= 0.0)) ++sign_changes;
        prev = v;
    }
    out.multi_root = sign_changes != 1;

    out.youden = youden_parametric(theta, interval.a, interval.b);
    out.c_youden = out.youden.c_y;
    out.risk_at_youden = risk(theta, cfg, out.c_youden);
    return out;
}

// Exact and first-order Youden displacement of the optimal cutoff.  The
// first-order term is log(target ratio) divided by the slope of
// g(c) = log LR(c) at the Youden point, where the slope reduces to
// (f1'(c_Y) - f0'(c_Y)) / f1(c_Y) because the densities cross there.
inline std::pair<double, double> youden_displacement(const ThetaPair& theta,
                                                     const DecisionConfig& cfg) {
    const AdmissibleInterval interval = admissible_interval(theta, cfg);
    if (!interval.bracketed) {
        throw std::invalid_argument("youden_displacement: no bracketed interval");
    }
    const CutoffResult res = optimal_cutoff(theta, cfg, interval);
    const double c_y = res.c_youden;
    const double h = 1e-4 * (1.0 + std::fabs(c_y));
    const double d1 = richardson_derivative([&](double x) { return pdf(theta.d1, x); }, c_y, h);
    const double d0 = richardson_derivative([&](double x) { return pdf(theta.d0, x); }, c_y, h);
    const double dcg = (d1 - d0) / pdf(theta.d1, c_y);
    if (std::fabs(dcg) < 1e-8) {
        throw std::runtime_error("youden_displacement: degenerate slope at the Youden point");
    }
    const double exact = res.c_star - c_y;
    const double first_order = std::log(cfg.target_ratio()) / dcg;
    return {exact, first_order};
}

}  // namespace rocsmsn
