#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "rocsmsn/roc.hpp"

using namespace rocsmsn;

namespace {

std::vector<ThetaPair> scenario_pairs() {
    return {
        {skew_normal(0, 1, 1), skew_normal(2, 1, 1.5)},
        {skew_normal(0, 1, 1.5), skew_normal(2, 1.2, 2)},
        {skew_normal(0, 1, 1), skew_normal(1, 1, 1.2)},
        {skew_t(0, 1, 1, 8), skew_t(2, 1, 1.5, 8)},
        {skew_t(0, 1, 1.5, 7), skew_t(2, 1.2, 2, 7)},
        {skew_t(0, 1, 1, 5), skew_t(1, 1, 1.2, 5)},
    };
}

ThetaPair binormal_shift2() {
    return {skew_normal(0, 1, 0), skew_normal(2, 1, 0)};
}

// Independent quantile oracle: plain bisection on the cdf, no secant logic.
double bisect_quantile(const DistSpec& spec, double p) {
    double lo = spec.xi - 200.0 * spec.omega, hi = spec.xi + 200.0 * spec.omega;
    for (int i = 0; i < 200; ++i) {
        const double mid = 0.5 * (lo + hi);
        (cdf(spec, mid) < p ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

}  // namespace

TEST_CASE("roc point basics") {
    const ThetaPair same{skew_normal(1, 1, 1), skew_normal(1, 1, 1)};
    for (double r : {0.1, 0.5, 0.9}) {
        const auto p = roc_point(same, r);
        CHECK(p.fpf == r);
        CHECK(p.tpf == Catch::Approx(r).margin(1e-8));
    }
    CHECK_THROWS_AS(roc_point(same, 0.0), std::domain_error);
    CHECK_THROWS_AS(roc_point(same, 1.0), std::domain_error);

    // Cross-check against the composed-oracle formula at r = 0.5 for the
    // first scenario pair.
    const ThetaPair sn1 = scenario_pairs()[0];
    const double c = bisect_quantile(sn1.d0, 0.5);
    CHECK(roc_point(sn1, 0.5).tpf == Catch::Approx(1.0 - cdf(sn1.d1, c)).margin(1e-7));

    // Monotone in r.
    double prev = 0.0;
    for (double r = 0.05; r < 1.0; r += 0.05) {
        const double t = roc_point(sn1, r).tpf;
        CHECK(t >= prev - 1e-10);
        prev = t;
    }
}

TEST_CASE("likelihood ratio closed forms") {
    const ThetaPair same{skew_t(0, 1, 1, 5), skew_t(0, 1, 1, 5)};
    for (double c : {-2.0, 0.0, 3.0}) {
        CHECK(likelihood_ratio(same, c) == Catch::Approx(1.0).margin(1e-12));
    }
    const ThetaPair bn = binormal_shift2();
    CHECK(likelihood_ratio(bn, 1.0) == Catch::Approx(1.0).margin(1e-10));
    // Gaussian equal-variance shift: LR(c) = exp(2c - 2).
    CHECK(likelihood_ratio(bn, 2.0) == Catch::Approx(std::exp(2.0)).epsilon(1e-10));
    // Deep tail: the densities underflow but the log-space quotient survives.
    const double lr_tail = likelihood_ratio(bn, -300.0);
    CHECK(std::isfinite(lr_tail));
    CHECK(lr_tail == Catch::Approx(std::exp(-602.0)).epsilon(1e-8));
    CHECK(log_likelihood_ratio(bn, -300.0) == Catch::Approx(-602.0).margin(1e-8));
}

TEST_CASE("auc known values") {
    const ThetaPair same{skew_normal(0, 1, 1), skew_normal(0, 1, 1)};
    CHECK(auc(same) == Catch::Approx(0.5).margin(1e-6));
    // Binormal closed form: Phi(2 / sqrt(2)).
    CHECK(auc(binormal_shift2()) == Catch::Approx(norm_cdf(kSqrt2)).margin(1e-4));
    CHECK_THROWS_AS(auc(binormal_shift2(), 5), std::invalid_argument);
}

TEST_CASE("auc complement symmetry") {
    const ThetaPair sn1 = scenario_pairs()[0];
    const ThetaPair swapped{sn1.d1, sn1.d0};
    const double a = auc(sn1);
    CHECK(a >= 0.0);
    CHECK(a <= 1.0);
    // The two trapezoid sums each carry O(1e-4) endpoint error at h = 1000
    // (the integrand has unbounded slope at the corners), so the exact
    // complement identity holds only to that order.
    CHECK(a + auc(swapped) == Catch::Approx(1.0).margin(5e-4));
}

TEST_CASE("auc agrees with a pairwise sampling oracle") {
    const ThetaPair sn1 = scenario_pairs()[0];
    std::mt19937_64 rng(1234);
    const auto x0 = sample(sn1.d0, 1000000, rng);
    const auto x1 = sample(sn1.d1, 1000000, rng);
    std::size_t wins = 0;
    for (std::size_t i = 0; i < x0.size(); ++i) {
        if (x1[i] > x0[i]) ++wins;
    }
    const double p_correct = static_cast<double>(wins) / x0.size();
    CHECK(auc(sn1) == Catch::Approx(p_correct).margin(0.002));
}

TEST_CASE("roc slope equals the likelihood ratio") {
    for (const ThetaPair& theta : scenario_pairs()) {
        const double a = quantile(theta.d0, 0.02);
        const double b = quantile(theta.d1, 0.98);
        const double h = 1e-4 * (b - a);
        for (int i = 1; i < 50; ++i) {
            const double c = a + (b - a) * i / 50.0;
            const double dtpf = cdf(theta.d1, c - h) - cdf(theta.d1, c + h);
            const double dfpf = cdf(theta.d0, c - h) - cdf(theta.d0, c + h);
            const double slope = dtpf / dfpf;
            const double lr = likelihood_ratio(theta, c);
            CHECK(std::fabs(slope - lr) < 1e-3 * std::max(1.0, lr));
        }
    }
}

TEST_CASE("roc curve structure and export") {
    const RocCurve curve = make_roc_curve(binormal_shift2(), 100);
    REQUIRE(curve.points.size() == 101);
    CHECK(curve.points.front().fpf == 0.0);
    CHECK(curve.points.front().tpf == 0.0);
    CHECK(curve.points.back().fpf == 1.0);
    CHECK(curve.points.back().tpf == 1.0);
    for (std::size_t i = 1; i < curve.points.size(); ++i) {
        CHECK(curve.points[i].fpf > curve.points[i - 1].fpf);
        CHECK(curve.points[i].tpf >= curve.points[i - 1].tpf - 1e-10);
    }
    // Interior points match the direct evaluation.
    const auto direct = roc_point(binormal_shift2(), 0.25);
    CHECK(curve.points[25].tpf == Catch::Approx(direct.tpf).margin(1e-7));
    const std::string csv = curve.to_csv();
    CHECK(csv.rfind("fpf,tpf\n", 0) == 0);
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 102);
}

TEST_CASE("parametric youden known values") {
    // Equal-variance shift: the densities cross exactly at the midpoint.
    const auto res = youden_parametric(binormal_shift2(), -4.0, 6.0);
    CHECK(res.c_y == Catch::Approx(1.0).margin(1e-6));
    CHECK(res.j == Catch::Approx(norm_cdf(1.0) - norm_cdf(-1.0)).margin(1e-7));
    CHECK(res.interior);
    CHECK(res.method == YoudenMethod::Parametric);
    // Unit-slope condition at the optimum.
    const double f0 = pdf(binormal_shift2().d0, res.c_y);
    const double f1 = pdf(binormal_shift2().d1, res.c_y);
    CHECK(std::fabs(f1 - f0) < 1e-6 * f0);
}

TEST_CASE("parametric youden agrees with a grid-search oracle") {
    const ThetaPair sn1 = scenario_pairs()[0];
    const double a = -3.0, b = 6.0;
    const auto res = youden_parametric(sn1, a, b);
    const int m = 20000;
    double best_c = a, best_j = -1.0;
    for (int i = 0; i <= m; ++i) {
        const double c = a + (b - a) * i / m;
        const double j = cdf(sn1.d0, c) - cdf(sn1.d1, c);
        if (j > best_j) {
            best_j = j;
            best_c = c;
        }
    }
    CHECK(res.c_y == Catch::Approx(best_c).margin((b - a) / m));
    CHECK(res.j >= best_j - 1e-9);
}

TEST_CASE("parametric youden boundary flag") {
    // Interval that excludes the true crossing at 1: the maximiser pins to an
    // endpoint and the result is marked non-interior.
    const auto res = youden_parametric(binormal_shift2(), -4.0, -2.0);
    CHECK_FALSE(res.interior);
    CHECK(res.c_y == Catch::Approx(-2.0).margin(1e-6));
}

TEST_CASE("empirical youden brute force") {
    const std::vector<double> d0{0.0, 1.0, 2.0};
    const std::vector<double> d1{1.5, 2.5, 3.5};
    const auto res = youden_empirical(d0, d1);
    // Exhaustive oracle over the same candidate set.
    std::vector<double> cands;
    std::vector<double> pooled{0.0, 1.0, 1.5, 2.0, 2.5, 3.5};
    for (std::size_t i = 0; i < pooled.size(); ++i) {
        cands.push_back(pooled[i]);
        if (i + 1 < pooled.size()) cands.push_back(0.5 * (pooled[i] + pooled[i + 1]));
    }
    auto emp_j = [&](double c) {
        auto frac = [&](const std::vector<double>& v) {
            double k = 0;
            for (double x : v) {
                if (x <= c) ++k;
            }
            return k / v.size();
        };
        return frac(d0) - frac(d1);
    };
    double best_j = -1.0, best_c = 0.0;
    for (double c : cands) {
        if (emp_j(c) > best_j + 1e-15) {
            best_j = emp_j(c);
            best_c = c;
        }
    }
    CHECK(res.j == Catch::Approx(best_j).margin(1e-12));
    CHECK(res.c_y == Catch::Approx(best_c).margin(1e-12));
    CHECK(res.method == YoudenMethod::Empirical);
}

TEST_CASE("empirical youden edge cases") {
    const std::vector<double> same{1.0, 2.0, 3.0};
    const auto tie = youden_empirical(same, same);
    CHECK(tie.j == Catch::Approx(0.0).margin(1e-12));
    // Tie-break lands on the smallest admissible threshold.
    CHECK(tie.c_y == Catch::Approx(1.0).margin(1e-12));

    const std::vector<double> lo{0.0, 0.5, 1.0};
    const std::vector<double> hi{2.0, 2.5, 3.0};
    const auto sep = youden_empirical(lo, hi);
    CHECK(sep.j == Catch::Approx(1.0).margin(1e-12));
    CHECK(sep.c_y >= 1.0);
    CHECK(sep.c_y < 2.0);

    CHECK_THROWS_AS(youden_empirical(std::vector<double>{}, same), std::invalid_argument);
}

TEST_CASE("parametric and empirical youden converge at large n") {
    // The empirical Youden threshold has cube-root asymptotics, so compare
    // the median deviation over several independent samples rather than a
    // single draw.
    const ThetaPair sn1 = scenario_pairs()[0];
    const auto par = youden_parametric(sn1, -3.0, 6.0);
    std::vector<double> diffs;
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        std::mt19937_64 rng(seed);
        const auto d0 = sample(sn1.d0, 10000, rng);
        const auto d1 = sample(sn1.d1, 10000, rng);
        diffs.push_back(std::fabs(par.c_y - youden_empirical(d0, d1).c_y));
    }
    std::sort(diffs.begin(), diffs.end());
    CHECK(diffs[2] < 0.05);
}
