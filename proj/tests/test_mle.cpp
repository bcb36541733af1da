#include <catch2/catch_amalgamated.hpp>

#include <Eigen/Dense>
#include <cmath>
#include <random>
#include <vector>

#include "rocsmsn/mle.hpp"

using namespace rocsmsn;

namespace {

std::vector<double> draw(const DistSpec& spec, std::size_t n, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    return sample(spec, n, rng);
}

}  // namespace

TEST_CASE("bfgs minimiser finds known optima") {
    // Shifted quadratic with off-diagonal coupling; minimum at (1, -2).
    auto quad = [](const std::vector<double>& x) {
        const double u = x[0] - 1.0, v = x[1] + 2.0;
        return 2.0 * u * u + u * v + 1.5 * v * v + 3.0;
    };
    auto res = detail::bfgs_minimize(quad, {5.0, 5.0});
    REQUIRE(res.converged);
    CHECK(res.x[0] == Catch::Approx(1.0).margin(1e-6));
    CHECK(res.x[1] == Catch::Approx(-2.0).margin(1e-6));
    CHECK(res.f == Catch::Approx(3.0).margin(1e-10));

    // Rosenbrock, minimum at (1, 1).
    auto rosen = [](const std::vector<double>& x) {
        const double a = 1.0 - x[0], b = x[1] - x[0] * x[0];
        return a * a + 100.0 * b * b;
    };
    auto res2 = detail::bfgs_minimize(rosen, {-1.2, 1.0}, 1e-7, 2000);
    REQUIRE(res2.converged);
    CHECK(res2.x[0] == Catch::Approx(1.0).margin(1e-5));
    CHECK(res2.x[1] == Catch::Approx(1.0).margin(1e-5));
}

TEST_CASE("log likelihood matches a direct sum") {
    const auto data = draw(skew_normal(0, 1, 1), 50, 11);
    const DistSpec spec = skew_normal(0.2, 1.1, 0.8);
    double direct = 0.0;
    for (double x : data) direct += log_pdf(spec, x);
    const auto theta = to_unconstrained(spec);
    CHECK(log_likelihood(Family::SkewNormal, data, theta) ==
          Catch::Approx(direct).epsilon(1e-13));
    // Invalid parameter vectors yield -inf rather than throwing.
    CHECK(log_likelihood(Family::SkewNormal, data,
                         std::vector<double>{0.0, std::nan(""), 1.0}) ==
          -std::numeric_limits<double>::infinity());
}

TEST_CASE("skew-normal fit recovers known parameters") {
    const DistSpec truth = skew_normal(2.0, 1.0, 1.5);
    const auto data = draw(truth, 4000, 42);
    const GroupFit gf = fit(data, Family::SkewNormal);
    REQUIRE(gf.converged);
    CHECK(gf.n == 4000);

    // The MLE beats the truth in sample likelihood by construction.
    const double ll_truth =
        log_likelihood(truth.family, data, to_unconstrained(truth));
    CHECK(gf.loglik >= ll_truth - 1e-8);

    // Wald bands from the observed information cover the truth comfortably.
    Eigen::MatrixXd cov = gf.obs_info.inverse();
    const auto theta_hat = to_unconstrained(gf.spec);
    const auto theta_true = to_unconstrained(truth);
    for (int j = 0; j < 3; ++j) {
        const double se = std::sqrt(cov(j, j));
        CHECK(std::fabs(theta_hat[j] - theta_true[j]) < 5.0 * se);
    }
    CHECK(gf.bic == Catch::Approx(-2.0 * gf.loglik + 3.0 * std::log(4000.0)).margin(1e-9));
}

TEST_CASE("skew-t fit recovers known parameters") {
    const DistSpec truth = skew_t(2.0, 1.2, 2.0, 7.0);
    const auto data = draw(truth, 4000, 99);
    const GroupFit gf = fit(data, Family::SkewT);
    REQUIRE(gf.converged);
    CHECK(gf.spec.xi == Catch::Approx(2.0).margin(0.15));
    CHECK(gf.spec.omega == Catch::Approx(1.2).margin(0.2));
    CHECK(gf.spec.alpha == Catch::Approx(2.0).margin(0.8));
    CHECK(gf.spec.nu > 3.5);
    const double ll_truth =
        log_likelihood(truth.family, data, to_unconstrained(truth));
    CHECK(gf.loglik >= ll_truth - 1e-8);
}

TEST_CASE("fit input validation") {
    std::vector<double> tiny(10, 1.0);
    CHECK_THROWS_AS(fit(tiny, Family::SkewNormal), std::invalid_argument);
    auto data = draw(skew_normal(0, 1, 1), 100, 3);
    data[50] = std::numeric_limits<double>::quiet_NaN();
    CHECK_THROWS_AS(fit(data, Family::SkewNormal), std::invalid_argument);
}

TEST_CASE("observed information agrees with the score outer product") {
    // Independent oracle: at the MLE the averaged score outer product is a
    // consistent estimate of the same information limit, so the two matrices
    // agree up to sampling error at this n.
    const auto data = draw(skew_normal(1.0, 1.0, 2.0), 4000, 7);
    const GroupFit gf = fit(data, Family::SkewNormal);
    REQUIRE(gf.converged);
    const auto theta = to_unconstrained(gf.spec);
    Eigen::MatrixXd opg = Eigen::MatrixXd::Zero(3, 3);
    for (double x : data) {
        auto score = richardson_gradient(
            [&](const std::vector<double>& t) {
                return log_pdf(from_unconstrained(Family::SkewNormal, t), x);
            },
            theta);
        Eigen::Map<Eigen::Vector3d> s(score.data());
        opg += s * s.transpose();
    }
    for (int i = 0; i < 3; ++i) {
        for (int j = 0; j < 3; ++j) {
            const double scale = std::sqrt(opg(i, i) * opg(j, j));
            CHECK(std::fabs(gf.obs_info(i, j) - opg(i, j)) < 0.12 * scale);
        }
    }
}

TEST_CASE("information regularisation clamps and rejects") {
    Eigen::MatrixXd ident = Eigen::MatrixXd::Identity(3, 3);
    Eigen::MatrixXd m = ident;
    CHECK_FALSE(regularise_information(m));
    CHECK((m - ident).norm() < 1e-14);

    // One slightly negative direction gets floored to 1e-8 of the top one.
    Eigen::MatrixXd bad = ident;
    bad(2, 2) = -1e-4;
    CHECK(regularise_information(bad));
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(bad);
    CHECK(es.eigenvalues().minCoeff() == Catch::Approx(1e-8).epsilon(1e-6));

    Eigen::MatrixXd flat = Eigen::MatrixXd::Zero(2, 2);
    CHECK_THROWS_AS(regularise_information(flat), std::runtime_error);
}

TEST_CASE("joint covariance has the block structure") {
    const auto d0 = draw(skew_normal(0, 1, 1), 600, 21);
    const auto d1 = draw(skew_t(2, 1, 1.5, 8), 1000, 22);
    const GroupFit f0 = fit(d0, Family::SkewNormal);
    const GroupFit f1 = fit(d1, Family::SkewT);
    REQUIRE(f0.converged);
    REQUIRE(f1.converged);
    const JointCovariance jc = joint_covariance(f0, f1);
    CHECK(jc.n == 1600);
    CHECK(jc.eta0 == Catch::Approx(600.0 / 1600.0));
    CHECK(jc.p0 == 3);
    CHECK(jc.p1 == 4);
    REQUIRE(jc.sigma.rows() == 7);
    // Off-diagonal blocks vanish: the groups are fitted independently.
    CHECK(jc.sigma.topRightCorner(3, 4).norm() == 0.0);
    CHECK(jc.sigma.bottomLeftCorner(4, 3).norm() == 0.0);
    // Each block times its information over n is the identity.
    Eigen::MatrixXd chk0 =
        jc.sigma.topLeftCorner(3, 3) * f0.obs_info / static_cast<double>(jc.n);
    CHECK((chk0 - Eigen::MatrixXd::Identity(3, 3)).norm() < 1e-9);
    Eigen::MatrixXd chk1 =
        jc.sigma.bottomRightCorner(4, 4) * f1.obs_info / static_cast<double>(jc.n);
    CHECK((chk1 - Eigen::MatrixXd::Identity(4, 4)).norm() < 1e-9);
    CHECK((jc.sigma - jc.sigma.transpose()).norm() < 1e-9);
}

TEST_CASE("bic selection separates light and heavy tails") {
    // Heavy-tailed sample: the extra skew-t parameter pays for itself.
    const auto heavy = draw(skew_t(1, 1, 1.2, 4), 1500, 31);
    const ModelSelection sel_heavy = select_model(heavy);
    CHECK(sel_heavy.best.spec.family == Family::SkewT);
    CHECK(sel_heavy.delta_bic > 0.0);

    // Skew-normal sample: BIC's complexity penalty keeps the smaller model.
    const auto light = draw(skew_normal(1, 1, 1.5), 1500, 32);
    const ModelSelection sel_light = select_model(light);
    CHECK(sel_light.best.spec.family == Family::SkewNormal);
    CHECK(sel_light.delta_bic < 0.0);
}
