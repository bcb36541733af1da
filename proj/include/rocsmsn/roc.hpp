#pragma once

// Parametric ROC machinery for a two-group marker: curve points, trapezoidal
// AUC, likelihood ratio (the local ROC slope), and the Youden cutoff in both
// its parametric and empirical forms.

#include <algorithm>
#include <cmath>
#include <optional>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "rocsmsn/distributions.hpp"
#include "rocsmsn/numerics.hpp"

namespace rocsmsn {

// The pair of fitted (or true) group laws: d0 = non-diseased, d1 = diseased.
struct ThetaPair {
    DistSpec d0, d1;
};

struct RocPoint {
    double fpf = 0.0;
    double tpf = 0.0;
};

inline RocPoint roc_point(const ThetaPair& theta, double r) {
    if (!(r > 0.0 && r < 1.0)) {
        throw std::domain_error("roc_point: r outside (0,1)");
    }
    const double c = quantile(theta.d0, 1.0 - r);
    return {r, 1.0 - cdf(theta.d1, c)};
}

// log f1(c) - log f0(c); stays finite deep in the tails where the densities
// themselves underflow.
inline double log_likelihood_ratio(const ThetaPair& theta, double c) {
    return log_pdf(theta.d1, c) - log_pdf(theta.d0, c);
}

inline double likelihood_ratio(const ThetaPair& theta, double c) {
    const double l0 = log_pdf(theta.d0, c);
    const double l1 = log_pdf(theta.d1, c);
    if (!std::isfinite(l0) && !std::isfinite(l1)) {
        throw std::domain_error("likelihood_ratio: both densities underflow");
    }
    return std::exp(l1 - l0);
}

namespace detail {

// TPF values on the interior FPF grid r_i = i/h, i = 1..h-1.  The thresholds
// Q0(1-r_i) decrease in i, so each one is root-found on a bracket whose upper
// end is the previous solution -- far cheaper than h independent quantile
// calls.
inline std::vector<double> tpf_grid(const ThetaPair& theta, int h) {
    std::vector<double> tpf(h - 1);
    const double floor_c = quantile(theta.d0, 0.5 / h);
    double upper = quantile(theta.d0, 1.0 - 1.0 / h);
    tpf[0] = 1.0 - cdf(theta.d1, upper);
    for (int i = 2; i < h; ++i) {
        const double p = 1.0 - static_cast<double>(i) / h;
        auto g = [&](double c) { return cdf(theta.d0, c) - p; };
        double lo = std::min(floor_c, upper - 1e-12);
        if (g(lo) > 0.0) {
            // Only reachable if the floor estimate was optimistic; widen down.
            double span = std::max(1.0, upper - lo);
            while (g(lo) > 0.0) {
                lo -= span;
                span *= 2.0;
            }
        }
        const auto root = find_root(g, lo, upper, 1e-10, 1e-12, 300);
        upper = root.x;
        tpf[i - 1] = 1.0 - cdf(theta.d1, upper);
    }
    return tpf;
}

}  // namespace detail

// Trapezoidal AUC on a uniform FPF grid of step 1/h.  The integrand
// 1 - F1(Q0(1-r)) vanishes at r=0 and equals 1 at r=1.
inline double auc(const ThetaPair& theta, int h = 1000) {
    if (h < 10) {
        throw std::invalid_argument("auc: grid size must be at least 10");
    }
    const auto tpf = detail::tpf_grid(theta, h);
    double acc = 0.5;  // endpoint contributions: (0 + 1)/2
    for (double t : tpf) acc += t;
    return acc / h;
}

struct RocCurve {
    std::vector<RocPoint> points;
    ThetaPair theta;

    std::string to_csv() const {
        std::ostringstream out;
        out.precision(10);
        out << "fpf,tpf\n";
        for (const RocPoint& p : points) {
            out << p.fpf << ',' << p.tpf << '\n';
        }
        return out.str();
    }
};

inline RocCurve make_roc_curve(const ThetaPair& theta, int h = 1000) {
    if (h < 10) {
        throw std::invalid_argument("make_roc_curve: grid size must be at least 10");
    }
    RocCurve curve;
    curve.theta = theta;
    curve.points.reserve(h + 1);
    curve.points.push_back({0.0, 0.0});
    const auto tpf = detail::tpf_grid(theta, h);
    for (int i = 1; i < h; ++i) {
        curve.points.push_back({static_cast<double>(i) / h, tpf[i - 1]});
    }
    curve.points.push_back({1.0, 1.0});
    return curve;
}

// ---------------------------------------------------------------------------
// Youden index
// ---------------------------------------------------------------------------

enum class YoudenMethod { Parametric, Empirical };

struct YoudenResult {
    double c_y = 0.0;
    double j = 0.0;
    YoudenMethod method = YoudenMethod::Parametric;
    bool interior = true;  // false when the maximiser sits on the boundary
};

// Maximise J(c) = F0(c) - F1(c) on [a, b].  Stationary points satisfy
// f0(c) = f1(c); they are located by a sign-change scan of f0 - f1 with a
// golden-section fallback when the scan finds no crossing.
inline YoudenResult youden_parametric(const ThetaPair& theta, double a, double b) {
    if (!(a < b)) {
        throw std::invalid_argument("youden_parametric: empty interval");
    }
    auto jfun = [&](double c) { return cdf(theta.d0, c) - cdf(theta.d1, c); };
    auto diff = [&](double c) { return pdf(theta.d0, c) - pdf(theta.d1, c); };

    double best_c = a;
    double best_j = jfun(a);
    const double jb = jfun(b);
    if (jb > best_j) {
        best_c = b;
        best_j = jb;
    }

    constexpr int kScan = 64;
    double prev_x = a, prev_d = diff(a);
    bool crossing_found = false;
    for (int i = 1; i <= kScan; ++i) {
        const double x = a + (b - a) * i / kScan;
        const double d = diff(x);
        if ((prev_d <= 0.0) != (d <= 0.0)) {
            crossing_found = true;
            const auto root = find_root(diff, prev_x, x, 1e-12, 1e-10, 200);
            const double jc = jfun(root.x);
            if (jc > best_j) {
                best_c = root.x;
                best_j = jc;
            }
        }
        prev_x = x;
        prev_d = d;
    }
    if (!crossing_found) {
        const double c = golden_section_max(jfun, a, b, 1e-9 * (b - a));
        const double jc = jfun(c);
        if (jc > best_j) {
            best_c = c;
            best_j = jc;
        }
    }

    YoudenResult out;
    out.c_y = best_c;
    out.j = best_j;
    out.method = YoudenMethod::Parametric;
    out.interior = (best_c - a) > 1e-6 * (b - a) && (b - best_c) > 1e-6 * (b - a);
    return out;
}

// Empirical Youden: maximise the empirical index over the pooled order
// statistics and the midpoints between adjacent ones.  Ties break toward the
// smallest maximising threshold.
inline YoudenResult youden_empirical(std::span<const double> data0,
                                     std::span<const double> data1) {
    if (data0.empty() || data1.empty()) {
        throw std::invalid_argument("youden_empirical: empty sample");
    }
    std::vector<double> s0(data0.begin(), data0.end());
    std::vector<double> s1(data1.begin(), data1.end());
    std::sort(s0.begin(), s0.end());
    std::sort(s1.begin(), s1.end());

    std::vector<double> pooled;
    pooled.reserve(s0.size() + s1.size());
    std::merge(s0.begin(), s0.end(), s1.begin(), s1.end(), std::back_inserter(pooled));
    std::vector<double> candidates;
    candidates.reserve(2 * pooled.size());
    for (std::size_t i = 0; i < pooled.size(); ++i) {
        candidates.push_back(pooled[i]);
        if (i + 1 < pooled.size() && pooled[i + 1] > pooled[i]) {
            candidates.push_back(0.5 * (pooled[i] + pooled[i + 1]));
        }
    }

    auto ecdf = [](const std::vector<double>& s, double c) {
        return static_cast<double>(std::upper_bound(s.begin(), s.end(), c) - s.begin()) /
               static_cast<double>(s.size());
    };

    YoudenResult out;
    out.method = YoudenMethod::Empirical;
    out.c_y = candidates.front();
    out.j = -1.0;
    for (double c : candidates) {
        const double j = ecdf(s0, c) - ecdf(s1, c);
        if (j > out.j + 1e-15) {
            out.j = j;
            out.c_y = c;
        }
    }
    return out;
}

}  // namespace rocsmsn
