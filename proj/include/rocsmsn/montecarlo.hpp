#pragma once

// Scenario-driven Monte Carlo validation harness: per-replication simulate /
// fit / cutoff / inference pipeline with an auditable exclusion taxonomy,
// deterministic per-replication seeding, and the aggregate metric panel
// (bias, RMSE, variance ratio, coverage, bracket rate, W_n samples).

#include <cmath>
#include <cstdint>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "rocsmsn/cutoff.hpp"
#include "rocsmsn/distributions.hpp"
#include "rocsmsn/inference.hpp"
#include "rocsmsn/mle.hpp"

namespace rocsmsn {

struct ScenarioSpec {
    std::string name;
    DistSpec spec0, spec1;
    DecisionConfig cfg;
    std::size_t n_total = 400;       // balanced split: n0 = n1 = n/2
    std::size_t replications = 500;  // desk-scale default
    std::uint64_t seed = 20240901;
};

// The six validation scenarios (three skew-normal, three skew-t).
inline std::vector<ScenarioSpec> builtin_scenarios(std::size_t n_total = 400,
                                                   std::size_t replications = 500,
                                                   std::uint64_t seed = 20240901) {
    const DecisionConfig sym{1, 1, 0.5, 0.5};
    const DecisionConfig asym{1, 3, 0.8, 0.2};
    std::vector<ScenarioSpec> out = {
        {"SN1", skew_normal(0, 1, 1), skew_normal(2, 1, 1.5), sym},
        {"SN2", skew_normal(0, 1, 1.5), skew_normal(2, 1.2, 2), asym},
        {"SN3", skew_normal(0, 1, 1), skew_normal(1, 1, 1.2), sym},
        {"ST1", skew_t(0, 1, 1, 8), skew_t(2, 1, 1.5, 8), sym},
        {"ST2", skew_t(0, 1, 1.5, 7), skew_t(2, 1.2, 2, 7), asym},
        {"ST3", skew_t(0, 1, 1, 5), skew_t(1, 1, 1.2, 5), sym},
    };
    for (auto& sc : out) {
        sc.n_total = n_total;
        sc.replications = replications;
        sc.seed = seed;
    }
    return out;
}

// Root of the estimating equation at the true parameters.
inline double true_cutoff(const ScenarioSpec& sc) {
    const ThetaPair theta{sc.spec0, sc.spec1};
    const auto iv = admissible_interval(theta, sc.cfg);
    if (!iv.bracketed) {
        throw std::runtime_error("true_cutoff: estimating equation not bracketed at truth");
    }
    return optimal_cutoff(theta, sc.cfg, iv).c_star;
}

enum class ExclusionReason {
    None,
    FitFail,       // either group's MLE did not converge
    NoSignChange,  // no bracketed interval, or multiple roots on the scan grid
    SingularInfo,  // observed information not invertible
    NonfiniteVar,  // plug-in variance non-finite or non-positive
    FlatSlope,     // |dphi/dc| at or below the 1e-3 stability filter
};

inline const char* exclusion_name(ExclusionReason r) {
    switch (r) {
        case ExclusionReason::None: return "none";
        case ExclusionReason::FitFail: return "fit_fail";
        case ExclusionReason::NoSignChange: return "no_sign_change";
        case ExclusionReason::SingularInfo: return "singular_info";
        case ExclusionReason::NonfiniteVar: return "nonfinite_var";
        case ExclusionReason::FlatSlope: return "flat_slope";
    }
    return "unknown";
}

struct ReplicationRecord {
    bool success = false;
    ExclusionReason reason = ExclusionReason::None;
    double c_hat = 0.0;
    double v_hat = 0.0;
    double slope = 0.0;
    double ci_lo = 0.0, ci_hi = 0.0;
    bool ci_covers = false;
    bool fits_converged = false;
    bool initial_bracket = false;  // admissible interval bracketed with no widening
};

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t& state) {
    state += 0x9E3779B97F4A7C15ull;
    std::uint64_t z = state;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

// Independent, order-free stream seed for (master seed, scenario name, rep).
inline std::uint64_t replication_seed(const ScenarioSpec& sc, std::size_t rep) {
    std::uint64_t h = 0xCBF29CE484222325ull;  // FNV-1a over the name
    for (char c : sc.name) {
        h ^= static_cast<unsigned char>(c);
        h *= 0x100000001B3ull;
    }
    std::uint64_t state = sc.seed ^ h;
    splitmix64(state);
    state ^= static_cast<std::uint64_t>(rep);
    return splitmix64(state);
}

}  // namespace detail

inline ReplicationRecord run_replication(const ScenarioSpec& sc, std::size_t rep,
                                         double c_star_true) {
    ReplicationRecord rec;
    std::mt19937_64 rng(detail::replication_seed(sc, rep));
    const std::size_t n0 = sc.n_total / 2;
    const std::size_t n1 = sc.n_total - n0;
    const auto x0 = sample(sc.spec0, n0, rng);
    const auto x1 = sample(sc.spec1, n1, rng);

    GroupFit f0, f1;
    try {
        f0 = fit(x0, sc.spec0.family);
        f1 = fit(x1, sc.spec1.family);
    } catch (const std::exception&) {
        rec.reason = ExclusionReason::FitFail;
        return rec;
    }
    if (!f0.converged || !f1.converged) {
        rec.reason = ExclusionReason::FitFail;
        return rec;
    }
    rec.fits_converged = true;

    const ThetaPair theta{f0.spec, f1.spec};
    const auto iv = admissible_interval(theta, sc.cfg);
    rec.initial_bracket = iv.bracketed && iv.expansions == 0;
    if (!iv.bracketed) {
        rec.reason = ExclusionReason::NoSignChange;
        return rec;
    }

    CutoffResult cut;
    try {
        cut = optimal_cutoff(theta, sc.cfg, iv);
    } catch (const std::exception&) {
        rec.reason = ExclusionReason::NoSignChange;
        return rec;
    }
    if (cut.multi_root) {
        rec.reason = ExclusionReason::NoSignChange;
        return rec;
    }
    rec.c_hat = cut.c_star;

    JointCovariance jc;
    try {
        jc = joint_covariance(f0, f1);
    } catch (const std::exception&) {
        rec.reason = ExclusionReason::SingularInfo;
        return rec;
    }

    CutoffInference inf;
    try {
        inf = variance_plugin(theta, sc.cfg, cut.c_star, jc);
    } catch (const std::exception&) {
        rec.reason = ExclusionReason::NonfiniteVar;
        return rec;
    }
    rec.v_hat = inf.v_hat;
    rec.slope = std::fabs(inf.dphi_dc);
    rec.ci_lo = inf.ci_lo;
    rec.ci_hi = inf.ci_hi;
    if (inf.low_identifiability) {
        rec.reason = ExclusionReason::FlatSlope;
        return rec;
    }
    if (!(inf.v_hat > 0.0) || !std::isfinite(inf.v_hat)) {
        rec.reason = ExclusionReason::NonfiniteVar;
        return rec;
    }
    rec.ci_covers = inf.ci_lo <= c_star_true && c_star_true <= inf.ci_hi;
    rec.success = true;
    return rec;
}

struct ScenarioSummary {
    std::string name;
    double c_star_true = 0.0;
    std::size_t n_total = 0;
    std::size_t b = 0;
    double mean_c_hat = 0.0;
    double bias = 0.0;
    double rmse = 0.0;
    double sd = 0.0;
    double var_emp = 0.0;  // empirical variance of sqrt(n)(c_hat - c*)
    double var_th = 0.0;   // mean plug-in variance estimate
    double ratio = 0.0;
    double mean_slope = 0.0;
    double coverage = 0.0;
    double mean_ci_length = 0.0;
    double success_rate = 0.0;
    double bracket_rate = 0.0;
    bool unreliable = false;  // success rate below one half
    std::vector<double> w_n;  // standardised statistics, index order
    std::map<std::string, std::size_t> exclusions;
};

inline ScenarioSummary run_scenario(const ScenarioSpec& sc) {
    if (sc.replications == 0) {
        throw std::invalid_argument("run_scenario: zero replications");
    }
    ScenarioSummary out;
    out.name = sc.name;
    out.n_total = sc.n_total;
    out.b = sc.replications;
    out.c_star_true = true_cutoff(sc);

    std::vector<ReplicationRecord> records(sc.replications);
    for (std::size_t rep = 0; rep < sc.replications; ++rep) {
        records[rep] = run_replication(sc, rep, out.c_star_true);
    }

    // Deterministic index-order aggregation.
    std::size_t successes = 0, fit_ok = 0, initial_brackets = 0;
    double sum_c = 0.0, sum_v = 0.0, sum_slope = 0.0, sum_len = 0.0;
    std::size_t covered = 0;
    for (const auto& rec : records) {
        if (rec.fits_converged) {
            ++fit_ok;
            if (rec.initial_bracket) ++initial_brackets;
        }
        if (!rec.success) {
            ++out.exclusions[exclusion_name(rec.reason)];
            continue;
        }
        ++successes;
        sum_c += rec.c_hat;
        sum_v += rec.v_hat;
        sum_slope += rec.slope;
        sum_len += rec.ci_hi - rec.ci_lo;
        if (rec.ci_covers) ++covered;
    }
    out.success_rate = static_cast<double>(successes) / sc.replications;
    out.unreliable = out.success_rate < 0.5;
    out.bracket_rate =
        fit_ok == 0 ? 0.0 : static_cast<double>(initial_brackets) / fit_ok;
    if (successes == 0) return out;

    const double m = static_cast<double>(successes);
    out.mean_c_hat = sum_c / m;
    out.bias = out.mean_c_hat - out.c_star_true;
    // Population-style moments keep rmse^2 = bias^2 + sd^2 an exact identity.
    double ss_mean = 0.0, ss_true = 0.0;
    for (const auto& rec : records) {
        if (!rec.success) continue;
        ss_mean += (rec.c_hat - out.mean_c_hat) * (rec.c_hat - out.mean_c_hat);
        ss_true += (rec.c_hat - out.c_star_true) * (rec.c_hat - out.c_star_true);
    }
    out.sd = std::sqrt(ss_mean / m);
    out.rmse = std::sqrt(ss_true / m);
    out.var_emp = static_cast<double>(sc.n_total) * ss_mean / m;
    out.var_th = sum_v / m;
    out.ratio = out.var_emp / out.var_th;
    out.mean_slope = sum_slope / m;
    out.coverage = static_cast<double>(covered) / m;
    out.mean_ci_length = sum_len / m;

    const double root_n = std::sqrt(static_cast<double>(sc.n_total));
    const double denom = std::sqrt(out.var_th);
    out.w_n.reserve(successes);
    for (const auto& rec : records) {
        if (rec.success) {
            out.w_n.push_back(root_n * (rec.c_hat - out.c_star_true) / denom);
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// CSV export
// ---------------------------------------------------------------------------

inline std::string summaries_to_csv(const std::vector<ScenarioSummary>& rows) {
    std::ostringstream out;
    out.precision(6);
    out << std::fixed;
    out << "Scenario,c_star,n,Succ,c_hat_mean,Bias,RMSE,SD,Var_emp,Var_th,Ratio,"
           "Slope,Cov,Len,Bracket\n";
    for (const auto& s : rows) {
        out << s.name << ',' << s.c_star_true << ',' << s.n_total << ','
            << s.success_rate << ',' << s.mean_c_hat << ',' << s.bias << ','
            << s.rmse << ',' << s.sd << ',' << s.var_emp << ',' << s.var_th << ','
            << s.ratio << ',' << s.mean_slope << ',' << s.coverage << ','
            << s.mean_ci_length << ',' << s.bracket_rate << '\n';
    }
    return out.str();
}

// Sorted W_n with standard-normal reference quantiles at (i - 0.5)/m.
inline std::string wn_to_csv(const ScenarioSummary& summary) {
    std::vector<double> w = summary.w_n;
    std::sort(w.begin(), w.end());
    std::ostringstream out;
    out.precision(10);
    out << "w_n,normal_quantile\n";
    const std::size_t m = w.size();
    for (std::size_t i = 0; i < m; ++i) {
        out << w[i] << ',' << norm_quantile((i + 0.5) / static_cast<double>(m)) << '\n';
    }
    return out.str();
}

}  // namespace rocsmsn
