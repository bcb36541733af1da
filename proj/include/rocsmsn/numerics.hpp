#pragma once

// Shared numerical kernels: special functions, Richardson-extrapolated
// derivatives, adaptive Gauss-Kronrod quadrature, and safeguarded
// root-finding.  Everything here is a pure function of its inputs.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <stdexcept>
#include <vector>

namespace rocsmsn {

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double kSqrt2 = 1.41421356237309504880;
inline constexpr double kLogSqrt2Pi = 0.91893853320467274178;

// ---------------------------------------------------------------------------
// Gaussian density / distribution
// ---------------------------------------------------------------------------

inline double norm_pdf(double x) {
    return std::exp(-0.5 * x * x - kLogSqrt2Pi);
}

inline double norm_log_pdf(double x) {
    return -0.5 * x * x - kLogSqrt2Pi;
}

inline double norm_cdf(double x) {
    return 0.5 * std::erfc(-x / kSqrt2);
}

// log Phi(x), stable far into the left tail where erfc underflows.
inline double norm_log_cdf(double x) {
    if (x > -10.0) {
        return std::log(0.5 * std::erfc(-x / kSqrt2));
    }
    // Asymptotic expansion of the Mills ratio for x << 0.
    const double x2 = x * x;
    double series = 1.0 - 1.0 / x2 + 3.0 / (x2 * x2) - 15.0 / (x2 * x2 * x2);
    return norm_log_pdf(x) - std::log(-x) + std::log(series);
}

// Inverse standard normal CDF.  Acklam's rational approximation refined by
// two Halley steps; absolute accuracy well below 1e-10.
inline double norm_quantile(double p) {
    if (!(p > 0.0 && p < 1.0)) {
        throw std::domain_error("norm_quantile: p outside (0,1)");
    }
    static const double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                               -2.759285104469687e+02, 1.383577518672690e+02,
                               -3.066479806614716e+01, 2.506628277459239e+00};
    static const double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                               -1.556989798598866e+02, 6.680131188771972e+01,
                               -1.328068155288572e+01};
    static const double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                               -2.400758277161838e+00, -2.549732539343734e+00,
                               4.374664141464968e+00,  2.938163982698783e+00};
    static const double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                               2.445134137142996e+00, 3.754408661907416e+00};
    const double plow = 0.02425;
    double q, x;
    if (p < plow) {
        q = std::sqrt(-2.0 * std::log(p));
        x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
            ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    } else if (p <= 1.0 - plow) {
        q = p - 0.5;
        double r = q * q;
        x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
            (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
    } else {
        q = std::sqrt(-2.0 * std::log(1.0 - p));
        x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
            ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    }
    for (int i = 0; i < 2; ++i) {
        double e = norm_cdf(x) - p;
        double u = e / norm_pdf(x);
        x -= u / (1.0 + 0.5 * x * u);
    }
    return x;
}

// ---------------------------------------------------------------------------
// Regularised incomplete beta and Student-t
// ---------------------------------------------------------------------------

namespace detail {

// Continued fraction for the incomplete beta (Lentz's method).
inline double betacf(double a, double b, double x) {
    const double tiny = 1e-300;
    const double qab = a + b, qap = a + 1.0, qam = a - 1.0;
    double c = 1.0;
    double d = 1.0 - qab * x / qap;
    if (std::fabs(d) < tiny) d = tiny;
    d = 1.0 / d;
    double h = d;
    for (int m = 1; m <= 300; ++m) {
        const int m2 = 2 * m;
        double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if (std::fabs(d) < tiny) d = tiny;
        c = 1.0 + aa / c;
        if (std::fabs(c) < tiny) c = tiny;
        d = 1.0 / d;
        h *= d * c;
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if (std::fabs(d) < tiny) d = tiny;
        c = 1.0 + aa / c;
        if (std::fabs(c) < tiny) c = tiny;
        d = 1.0 / d;
        const double del = d * c;
        h *= del;
        if (std::fabs(del - 1.0) < 1e-15) break;
    }
    return h;
}

}  // namespace detail

// Regularised incomplete beta function I_x(a, b).
inline double inc_beta(double a, double b, double x) {
    if (x <= 0.0) return 0.0;
    if (x >= 1.0) return 1.0;
    const double lbeta = std::lgamma(a) + std::lgamma(b) - std::lgamma(a + b);
    const double front = std::exp(a * std::log(x) + b * std::log1p(-x) - lbeta);
    if (x < (a + 1.0) / (a + b + 2.0)) {
        return front * detail::betacf(a, b, x) / a;
    }
    return 1.0 - std::exp(b * std::log1p(-x) + a * std::log(x) - lbeta) *
                     detail::betacf(b, a, 1.0 - x) / b;
}

namespace detail {

// log of Gamma((nu+1)/2) / (Gamma(nu/2) sqrt(nu pi)).  For large nu the two
// lgamma values are ~1e17 and their difference loses every significant digit,
// so switch to the asymptotic expansion lgamma(a+1/2)-lgamma(a) =
// log(a)/2 - 1/(8a) + O(a^-2) well before that happens.
inline double student_t_log_norm(double nu) {
    if (nu > 1e8) {
        const double a = 0.5 * nu;
        return 0.5 * std::log(a) - 1.0 / (8.0 * a) - 0.5 * std::log(nu * kPi);
    }
    return std::lgamma(0.5 * (nu + 1.0)) - std::lgamma(0.5 * nu) -
           0.5 * std::log(nu * kPi);
}

}  // namespace detail

inline double student_t_pdf(double x, double nu) {
    return std::exp(detail::student_t_log_norm(nu) -
                    0.5 * (nu + 1.0) * std::log1p(x * x / nu));
}

inline double student_t_log_pdf(double x, double nu) {
    return detail::student_t_log_norm(nu) - 0.5 * (nu + 1.0) * std::log1p(x * x / nu);
}

inline double student_t_cdf(double x, double nu) {
    if (x == 0.0) return 0.5;
    if (nu > 1e8) return norm_cdf(x);  // O(1/nu) from the normal limit
    const double tail = 0.5 * inc_beta(0.5 * nu, 0.5, nu / (nu + x * x));
    return x > 0.0 ? 1.0 - tail : tail;
}

inline double student_t_log_cdf(double x, double nu) {
    if (nu > 1e8) return norm_log_cdf(x);
    if (x > -8.0) return std::log(student_t_cdf(x, nu));
    // Left tail: log of 0.5 * I_{nu/(nu+x^2)}(nu/2, 1/2).  The incomplete
    // beta itself stays representable well past any x seen in practice.
    double v = student_t_cdf(x, nu);
    if (v > 0.0) return std::log(v);
    // Leading-order tail when the CDF underflows.
    return detail::student_t_log_norm(nu) + 0.5 * nu * std::log(nu) -
           nu * std::log(-x) - std::log(nu);
}

// ---------------------------------------------------------------------------
// Richardson-extrapolated numerical derivatives
// ---------------------------------------------------------------------------

// Levels of extrapolation used everywhere a derivative is required.
inline constexpr int kRichardsonLevels = 4;

inline double richardson_step(double x) { return 1e-3 * (1.0 + std::fabs(x)); }

// First derivative of f at x via central differences on a shrinking step
// ladder h, h/2, h/4, h/8 combined by Richardson extrapolation.
template <typename F>
double richardson_derivative(F&& f, double x, double h0) {
    std::array<double, kRichardsonLevels> tab{};
    double h = h0;
    for (int i = 0; i < kRichardsonLevels; ++i) {
        tab[i] = (f(x + h) - f(x - h)) / (2.0 * h);
        h *= 0.5;
    }
    double fac = 1.0;
    for (int j = 1; j < kRichardsonLevels; ++j) {
        fac *= 4.0;
        for (int i = kRichardsonLevels - 1; i >= j; --i) {
            tab[i] = (fac * tab[i] - tab[i - 1]) / (fac - 1.0);
        }
    }
    return tab[kRichardsonLevels - 1];
}

template <typename F>
double richardson_derivative(F&& f, double x) {
    return richardson_derivative(std::forward<F>(f), x, richardson_step(x));
}

// Gradient of a multivariate function, one Richardson ladder per coordinate.
template <typename F>
std::vector<double> richardson_gradient(F&& f, const std::vector<double>& x) {
    std::vector<double> g(x.size());
    std::vector<double> y = x;
    for (std::size_t j = 0; j < x.size(); ++j) {
        auto fj = [&](double t) {
            y[j] = t;
            double v = f(y);
            y[j] = x[j];
            return v;
        };
        g[j] = richardson_derivative(fj, x[j]);
    }
    return g;
}

// Symmetric Hessian via extrapolated central second differences.
template <typename F>
std::vector<std::vector<double>> richardson_hessian(F&& f, const std::vector<double>& x) {
    const std::size_t p = x.size();
    std::vector<std::vector<double>> hess(p, std::vector<double>(p, 0.0));
    const double f0 = f(x);
    std::vector<double> y = x;

    for (std::size_t j = 0; j < p; ++j) {
        std::array<double, kRichardsonLevels> tab{};
        double h = richardson_step(x[j]);
        for (int lev = 0; lev < kRichardsonLevels; ++lev) {
            y[j] = x[j] + h;
            const double fp = f(y);
            y[j] = x[j] - h;
            const double fm = f(y);
            y[j] = x[j];
            tab[lev] = (fp - 2.0 * f0 + fm) / (h * h);
            h *= 0.5;
        }
        double fac = 1.0;
        for (int l = 1; l < kRichardsonLevels; ++l) {
            fac *= 4.0;
            for (int i = kRichardsonLevels - 1; i >= l; --i) {
                tab[i] = (fac * tab[i] - tab[i - 1]) / (fac - 1.0);
            }
        }
        hess[j][j] = tab[kRichardsonLevels - 1];
    }

    for (std::size_t j = 0; j < p; ++j) {
        for (std::size_t k = j + 1; k < p; ++k) {
            std::array<double, kRichardsonLevels> tab{};
            double hj = richardson_step(x[j]);
            double hk = richardson_step(x[k]);
            for (int lev = 0; lev < kRichardsonLevels; ++lev) {
                y[j] = x[j] + hj; y[k] = x[k] + hk; const double fpp = f(y);
                y[j] = x[j] - hj; y[k] = x[k] - hk; const double fmm = f(y);
                y[j] = x[j] + hj; y[k] = x[k] - hk; const double fpm = f(y);
                y[j] = x[j] - hj; y[k] = x[k] + hk; const double fmp = f(y);
                y[j] = x[j]; y[k] = x[k];
                tab[lev] = (fpp + fmm - fpm - fmp) / (4.0 * hj * hk);
                hj *= 0.5;
                hk *= 0.5;
            }
            double fac = 1.0;
            for (int l = 1; l < kRichardsonLevels; ++l) {
                fac *= 4.0;
                for (int i = kRichardsonLevels - 1; i >= l; --i) {
                    tab[i] = (fac * tab[i] - tab[i - 1]) / (fac - 1.0);
                }
            }
            hess[j][k] = hess[k][j] = tab[kRichardsonLevels - 1];
        }
    }
    return hess;
}

// ---------------------------------------------------------------------------
// Adaptive Gauss-Kronrod (G7,K15) quadrature
// ---------------------------------------------------------------------------

namespace detail {

// K15 abscissae on [0,1] (positive half) and weights; G7 weights embedded.
inline constexpr std::array<double, 8> kGkNodes = {
    0.991455371120813, 0.949107912342759, 0.864864423359769, 0.741531185599394,
    0.586087235467691, 0.405845151377397, 0.207784955007898, 0.000000000000000};
inline constexpr std::array<double, 8> kGkWeightsK = {
    0.022935322010529, 0.063092092629979, 0.104790010322250, 0.140653259715525,
    0.169004726639267, 0.190350578064785, 0.204432940075298, 0.209482141084728};
inline constexpr std::array<double, 4> kGkWeightsG = {
    0.129484966168870, 0.279705391489277, 0.381830050505119, 0.417959183673469};

template <typename F>
void gk15(F&& f, double a, double b, double& result, double& err) {
    const double c = 0.5 * (a + b);
    const double hl = 0.5 * (b - a);
    double resk = 0.0, resg = 0.0;
    for (int i = 0; i < 8; ++i) {
        const double dx = hl * kGkNodes[i];
        const double f1 = f(c - dx);
        const double f2 = (i == 7) ? f1 : f(c + dx);
        const double fsum = (i == 7) ? f1 : f1 + f2;
        resk += kGkWeightsK[i] * fsum;
        if (i % 2 == 1) {
            resg += kGkWeightsG[i / 2] * fsum;
        }
    }
    result = resk * hl;
    err = std::fabs((resk - resg) * hl);
}

}  // namespace detail

// Integrate f over [a, b] to the requested absolute tolerance using a
// worst-interval-first refinement queue.
template <typename F>
double integrate(F&& f, double a, double b, double abs_tol = 1e-10,
                 int max_intervals = 4000) {
    if (a == b) return 0.0;
    struct Seg { double a, b, val, err; };
    std::vector<Seg> segs;
    double v, e;
    detail::gk15(f, a, b, v, e);
    segs.push_back({a, b, v, e});
    double total_err = e;
    while (total_err > abs_tol && static_cast<int>(segs.size()) < max_intervals) {
        std::size_t worst = 0;
        for (std::size_t i = 1; i < segs.size(); ++i) {
            if (segs[i].err > segs[worst].err) worst = i;
        }
        Seg s = segs[worst];
        const double mid = 0.5 * (s.a + s.b);
        if (mid == s.a || mid == s.b) break;
        Seg left{s.a, mid, 0.0, 0.0}, right{mid, s.b, 0.0, 0.0};
        detail::gk15(f, left.a, left.b, left.val, left.err);
        detail::gk15(f, right.a, right.b, right.val, right.err);
        total_err += left.err + right.err - s.err;
        segs[worst] = left;
        segs.push_back(right);
    }
    double sum = 0.0;
    for (const Seg& s : segs) sum += s.val;
    return sum;
}

// ---------------------------------------------------------------------------
// Root-finding and 1-D optimisation
// ---------------------------------------------------------------------------

struct RootResult {
    double x = std::numeric_limits<double>::quiet_NaN();
    double fx = std::numeric_limits<double>::quiet_NaN();
    bool converged = false;
    int iterations = 0;
};

// Bisection-safeguarded secant (Illinois variant) on a bracketing interval:
// fa and fb must have opposite signs.  Converges when the bracket width has
// shrunk below x_tol_rel times the initial width and |f| is below f_tol.
template <typename F>
RootResult find_root(F&& f, double a, double b, double f_tol = 1e-10,
                     double x_tol_rel = 1e-10, int max_iter = 200) {
    double fa = f(a), fb = f(b);
    RootResult res;
    if (fa == 0.0) { res = {a, fa, true, 0}; return res; }
    if (fb == 0.0) { res = {b, fb, true, 0}; return res; }
    if ((fa > 0.0) == (fb > 0.0)) {
        throw std::invalid_argument("find_root: interval does not bracket a sign change");
    }
    const double width0 = std::fabs(b - a);
    int stagnant_side = 0;
    double x = a, fx = fa;
    for (int it = 0; it < max_iter; ++it) {
        // Secant through the bracket endpoints; the Illinois down-weighting
        // below prevents one endpoint from pinning the iteration.
        x = (fa * b - fb * a) / (fa - fb);
        const double lo = std::min(a, b), hi = std::max(a, b);
        if (!(x > lo && x < hi)) x = 0.5 * (a + b);
        fx = f(x);
        res.iterations = it + 1;
        if (fx == 0.0) break;
        if ((fx > 0.0) == (fb > 0.0)) {
            b = x; fb = fx;
            if (stagnant_side == 1) fa *= 0.5;
            stagnant_side = 1;
        } else {
            a = x; fa = fx;
            if (stagnant_side == -1) fb *= 0.5;
            stagnant_side = -1;
        }
        if (std::fabs(b - a) <= x_tol_rel * width0 && std::fabs(fx) <= f_tol) break;
        if (0.5 * (a + b) == a || 0.5 * (a + b) == b) break;  // machine limit
    }
    res.x = x;
    res.fx = fx;
    res.converged = std::fabs(fx) <= f_tol || std::fabs(b - a) <= x_tol_rel * width0;
    return res;
}

// Golden-section maximisation of a unimodal function on [a, b].
template <typename F>
double golden_section_max(F&& f, double a, double b, double x_tol = 1e-9) {
    const double invphi = 0.6180339887498949;
    double c = b - invphi * (b - a);
    double d = a + invphi * (b - a);
    double fc = f(c), fd = f(d);
    while (std::fabs(b - a) > x_tol) {
        if (fc > fd) {
            b = d; d = c; fd = fc;
            c = b - invphi * (b - a);
            fc = f(c);
        } else {
            a = c; c = d; fc = fd;
            d = a + invphi * (b - a);
            fd = f(d);
        }
    }
    return 0.5 * (a + b);
}

}  // namespace rocsmsn
