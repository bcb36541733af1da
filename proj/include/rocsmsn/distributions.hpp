#pragma once

// Skew-normal and skew-t distributions in the Azzalini parametrisation:
// densities, CDFs, quantiles, samplers, and the unconstrained coordinate
// chart (xi, log omega, alpha[, log(nu - 2)]) used by the fitting and
// inference layers.

#include <cmath>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "rocsmsn/numerics.hpp"

namespace rocsmsn {

enum class Family { SkewNormal, SkewT };

inline std::string family_name(Family f) {
    return f == Family::SkewNormal ? "sn" : "st";
}

inline Family family_from_name(const std::string& s) {
    if (s == "sn") return Family::SkewNormal;
    if (s == "st") return Family::SkewT;
    throw std::invalid_argument("unknown family tag: " + s);
}

inline int family_param_count(Family f) {
    return f == Family::SkewT ? 4 : 3;
}

// A fully specified univariate law.  nu is meaningful only for SkewT.
struct DistSpec {
    Family family = Family::SkewNormal;
    double xi = 0.0;
    double omega = 1.0;
    double alpha = 0.0;
    double nu = 0.0;

    int n_params() const { return family_param_count(family); }

    void validate() const {
        if (!(omega > 0.0) || !std::isfinite(xi) || !std::isfinite(alpha)) {
            throw std::invalid_argument("DistSpec: omega must be positive and all parameters finite");
        }
        if (family == Family::SkewT && !(nu > 2.0)) {
            throw std::invalid_argument("DistSpec: skew-t requires nu > 2");
        }
    }
};

inline DistSpec skew_normal(double xi, double omega, double alpha) {
    DistSpec s{Family::SkewNormal, xi, omega, alpha, 0.0};
    s.validate();
    return s;
}

inline DistSpec skew_t(double xi, double omega, double alpha, double nu) {
    DistSpec s{Family::SkewT, xi, omega, alpha, nu};
    s.validate();
    return s;
}

// ---------------------------------------------------------------------------
// Unconstrained coordinates
// ---------------------------------------------------------------------------

inline std::vector<double> to_unconstrained(const DistSpec& spec) {
    spec.validate();
    if (spec.family == Family::SkewNormal) {
        return {spec.xi, std::log(spec.omega), spec.alpha};
    }
    return {spec.xi, std::log(spec.omega), spec.alpha, std::log(spec.nu - 2.0)};
}

inline DistSpec from_unconstrained(Family family, std::span<const double> v) {
    if (static_cast<int>(v.size()) != family_param_count(family)) {
        throw std::invalid_argument("from_unconstrained: wrong vector length for family");
    }
    for (double x : v) {
        if (!std::isfinite(x)) {
            throw std::invalid_argument("from_unconstrained: non-finite entry");
        }
    }
    DistSpec spec;
    spec.family = family;
    spec.xi = v[0];
    spec.omega = std::exp(v[1]);
    spec.alpha = v[2];
    if (family == Family::SkewT) spec.nu = std::exp(v[3]) + 2.0;
    return spec;
}

// ---------------------------------------------------------------------------
// Densities
// ---------------------------------------------------------------------------

inline double log_pdf(const DistSpec& spec, double x) {
    if (!std::isfinite(x)) {
        throw std::domain_error("log_pdf: non-finite argument");
    }
    const double z = (x - spec.xi) / spec.omega;
    if (spec.family == Family::SkewNormal) {
        return std::log(2.0) - std::log(spec.omega) + norm_log_pdf(z) +
               norm_log_cdf(spec.alpha * z);
    }
    const double nu = spec.nu;
    const double w = spec.alpha * z * std::sqrt((nu + 1.0) / (nu + z * z));
    return std::log(2.0) - std::log(spec.omega) + student_t_log_pdf(z, nu) +
           student_t_log_cdf(w, nu + 1.0);
}

inline double pdf(const DistSpec& spec, double x) {
    return std::exp(log_pdf(spec, x));
}

// ---------------------------------------------------------------------------
// CDF by adaptive quadrature of the density
// ---------------------------------------------------------------------------

namespace detail {

// Upper bound on the standardised left-tail mass at z; used to place the
// quadrature anchor.  The skewing factor is at most one, so the mass below z
// is bounded by twice the symmetric base CDF.
inline double left_tail_bound(const DistSpec& spec, double z) {
    if (spec.family == Family::SkewNormal) {
        return 2.0 * norm_cdf(z);
    }
    return 2.0 * student_t_cdf(z, spec.nu);
}

inline double right_tail_bound(const DistSpec& spec, double z) {
    return left_tail_bound(spec, -z);
}

}  // namespace detail

inline double cdf(const DistSpec& spec, double x) {
    if (!std::isfinite(x)) {
        throw std::domain_error("cdf: non-finite argument");
    }
    spec.validate();
    const double z = (x - spec.xi) / spec.omega;
    if (detail::left_tail_bound(spec, z) < 1e-13) return 0.0;
    if (detail::right_tail_bound(spec, z) < 1e-13) return 1.0;

    // Quantile-bounded far-left anchor for the standardised density.
    double a = std::min(z, 0.0) - 10.0;
    while (detail::left_tail_bound(spec, a) > 1e-13) {
        a = std::min(a * 2.0, a - 10.0);
    }
    DistSpec std_spec = spec;
    std_spec.xi = 0.0;
    std_spec.omega = 1.0;
    auto f = [&](double t) { return pdf(std_spec, t); };

    // Split at landmarks around the mode, then geometrically into the tails,
    // so coarse panels cannot step over the body of the density and heavy
    // polynomial tails are resolved decade by decade.
    std::vector<double> marks = {-8.0, -2.0, 0.0, 2.0, 8.0};
    const double reach = std::max(std::fabs(a), std::fabs(z));
    for (double m = 16.0; m < reach; m *= 2.0) {
        marks.push_back(m);
        marks.push_back(-m);
    }
    marks.push_back(z);
    std::sort(marks.begin(), marks.end());
    double total = 0.0;
    double lo = a;
    for (double m : marks) {
        const double hi = std::clamp(m, a, z);
        if (hi > lo) {
            total += integrate(f, lo, hi, 1e-11);
            lo = hi;
        }
    }
    return std::min(total, 1.0);
}

// ---------------------------------------------------------------------------
// Quantile by safeguarded bisection/secant on the CDF
// ---------------------------------------------------------------------------

inline double quantile(const DistSpec& spec, double p) {
    if (!(p > 0.0 && p < 1.0)) {
        throw std::domain_error("quantile: p outside (0,1)");
    }
    spec.validate();
    // Bracket from +-50 omega around xi, widening x2 until a sign change.
    double half = 50.0 * spec.omega;
    auto g = [&](double x) { return cdf(spec, x) - p; };
    double lo = spec.xi - half, hi = spec.xi + half;
    for (int i = 0; i < 60 && !(g(lo) < 0.0); ++i) { half *= 2.0; lo = spec.xi - half; }
    for (int i = 0; i < 60 && !(g(hi) > 0.0); ++i) { half *= 2.0; hi = spec.xi + half; }
    RootResult r = find_root(g, lo, hi, 1e-9, 1e-13, 300);
    return r.x;
}

// ---------------------------------------------------------------------------
// Sampling via the stochastic representation
// ---------------------------------------------------------------------------

inline std::vector<double> sample(const DistSpec& spec, std::size_t n,
                                  std::mt19937_64& rng) {
    spec.validate();
    if (n == 0) {
        throw std::invalid_argument("sample: n must be at least 1");
    }
    std::vector<double> out(n);
    std::normal_distribution<double> gauss(0.0, 1.0);
    const double delta = spec.alpha / std::sqrt(1.0 + spec.alpha * spec.alpha);
    const double comp = std::sqrt(1.0 - delta * delta);
    std::gamma_distribution<double> chi2(spec.nu / 2.0, 2.0);
    for (std::size_t i = 0; i < n; ++i) {
        const double u0 = gauss(rng);
        const double u1 = gauss(rng);
        double w = delta * std::fabs(u0) + comp * u1;
        if (spec.family == Family::SkewT) {
            const double v = chi2(rng);
            w /= std::sqrt(v / spec.nu);
        }
        out[i] = spec.xi + spec.omega * w;
    }
    return out;
}

}  // namespace rocsmsn
