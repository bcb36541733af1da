#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <sstream>

#include "rocsmsn/montecarlo.hpp"

using namespace rocsmsn;

TEST_CASE("builtin scenarios mirror the simulation tables") {
    const auto all = builtin_scenarios(400, 500, 99);
    REQUIRE(all.size() == 6);
    CHECK(all[0].name == "SN1");
    CHECK(all[0].spec0.family == Family::SkewNormal);
    CHECK(all[0].cfg.target_ratio() == Catch::Approx(1.0));
    CHECK(all[1].cfg.target_ratio() == Catch::Approx(0.8 / 0.6));
    CHECK(all[3].spec1.nu == 8.0);
    CHECK(all[5].spec0.nu == 5.0);
    for (const auto& sc : all) {
        CHECK(sc.n_total == 400);
        CHECK(sc.replications == 500);
        CHECK(sc.seed == 99);
    }
}

TEST_CASE("true cutoffs match the reference table") {
    const auto all = builtin_scenarios();
    const double expected[] = {1.6101, 1.7607, 1.0122, 1.6145, 1.7842, 0.9723};
    for (std::size_t i = 0; i < all.size(); ++i) {
        INFO(all[i].name);
        CHECK(true_cutoff(all[i]) == Catch::Approx(expected[i]).margin(5e-4));
    }
}

TEST_CASE("replication records are deterministic in the seed") {
    auto sc = builtin_scenarios(200, 10, 4242)[0];
    const double c_true = true_cutoff(sc);
    const auto a = run_replication(sc, 3, c_true);
    const auto b = run_replication(sc, 3, c_true);
    CHECK(a.success == b.success);
    CHECK(a.c_hat == b.c_hat);  // bit-identical, not approximately equal
    CHECK(a.v_hat == b.v_hat);
    CHECK(a.ci_lo == b.ci_lo);
    CHECK(a.ci_hi == b.ci_hi);

    // Different replication index gives a different sample.
    const auto c = run_replication(sc, 4, c_true);
    CHECK(c.c_hat != a.c_hat);
}

TEST_CASE("undersized samples are excluded as fit failures") {
    auto sc = builtin_scenarios(10, 1, 7)[0];
    const auto rec = run_replication(sc, 0, 1.6101);
    CHECK_FALSE(rec.success);
    CHECK(rec.reason == ExclusionReason::FitFail);
    CHECK(exclusion_name(rec.reason) == std::string("fit_fail"));
}

TEST_CASE("single-replication summary equals the replication") {
    auto sc = builtin_scenarios(400, 1, 31)[0];
    const auto summary = run_scenario(sc);
    const auto rec = run_replication(sc, 0, summary.c_star_true);
    REQUIRE(rec.success);
    CHECK(summary.b == 1);
    CHECK(summary.mean_c_hat == rec.c_hat);
    CHECK(summary.var_th == rec.v_hat);
    CHECK(summary.sd == 0.0);
    CHECK(summary.rmse == Catch::Approx(std::fabs(rec.c_hat - summary.c_star_true)).margin(1e-14));
    CHECK(summary.coverage == (rec.ci_covers ? 1.0 : 0.0));
    CHECK(summary.success_rate == 1.0);
    REQUIRE(summary.w_n.size() == 1);
}

TEST_CASE("small scenario run produces a coherent panel") {
    auto sc = builtin_scenarios(400, 30, 20240901)[0];  // SN1
    const auto s = run_scenario(sc);
    CHECK(s.name == "SN1");
    CHECK(s.c_star_true == Catch::Approx(1.6101).margin(5e-4));
    CHECK(s.success_rate > 0.9);
    CHECK_FALSE(s.unreliable);
    // Exact within-run identity from population-style moments.
    CHECK(s.rmse * s.rmse == Catch::Approx(s.bias * s.bias + s.sd * s.sd).margin(1e-10));
    CHECK(s.ratio == Catch::Approx(s.var_emp / s.var_th).margin(1e-12));
    // Loose sanity bands for B = 30.
    CHECK(std::fabs(s.bias) < 0.05);
    CHECK(s.var_th == Catch::Approx(0.80).epsilon(0.25));
    CHECK(s.coverage >= 0.8);
    CHECK(s.bracket_rate > 0.9);
    CHECK(s.mean_slope == Catch::Approx(0.39).epsilon(0.2));
    CHECK(s.w_n.size() == static_cast<std::size_t>(s.success_rate * 30 + 0.5));
    // W_n is centred near zero at this scale.
    double mean_w = 0.0;
    for (double w : s.w_n) mean_w += w;
    mean_w /= s.w_n.size();
    CHECK(std::fabs(mean_w) < 0.6);
}

TEST_CASE("scenario runs are reproducible end to end") {
    auto sc = builtin_scenarios(200, 8, 555)[2];  // SN3
    const auto a = run_scenario(sc);
    const auto b = run_scenario(sc);
    CHECK(a.mean_c_hat == b.mean_c_hat);
    CHECK(a.var_th == b.var_th);
    CHECK(a.coverage == b.coverage);
    CHECK(a.w_n == b.w_n);
}

TEST_CASE("skew-t replication pipeline succeeds") {
    auto sc = builtin_scenarios(400, 1, 11)[3];  // ST1
    const double c_true = true_cutoff(sc);
    const auto rec = run_replication(sc, 0, c_true);
    INFO(exclusion_name(rec.reason));
    REQUIRE(rec.success);
    CHECK(std::fabs(rec.c_hat - c_true) < 0.4);
    CHECK(rec.v_hat > 0.0);
    CHECK(rec.slope > 1e-3);
}

TEST_CASE("csv exports use the panel column layout") {
    auto sc = builtin_scenarios(200, 5, 808)[0];
    const auto s = run_scenario(sc);
    const auto csv = summaries_to_csv({s});
    CHECK(csv.rfind("Scenario,c_star,n,Succ,c_hat_mean,Bias,RMSE,SD,Var_emp,Var_th,"
                    "Ratio,Slope,Cov,Len,Bracket\n",
                    0) == 0);
    CHECK(csv.find("SN1,") != std::string::npos);

    const auto qq = wn_to_csv(s);
    std::istringstream in(qq);
    std::string header;
    std::getline(in, header);
    CHECK(header == "w_n,normal_quantile");
    double prev_w = -1e300, prev_q = -1e300;
    std::string line;
    std::size_t rows = 0;
    while (std::getline(in, line)) {
        const auto comma = line.find(',');
        const double w = std::stod(line.substr(0, comma));
        const double q = std::stod(line.substr(comma + 1));
        CHECK(w >= prev_w);
        CHECK(q > prev_q);
        prev_w = w;
        prev_q = q;
        ++rows;
    }
    CHECK(rows == s.w_n.size());
}
