#pragma once

// End-to-end marker analysis: CSV ingestion, per-group model selection,
// decision-theoretic cutoff estimation with plug-in inference, sensitivity
// sweeps over decision configurations, and plot-data emitters.  This is the
// layer the command-line tool drives.

#include <algorithm>
#include <cmath>
#include <fstream>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "rocsmsn/cutoff.hpp"
#include "rocsmsn/inference.hpp"
#include "rocsmsn/mle.hpp"
#include "rocsmsn/roc.hpp"

namespace rocsmsn {

// ---------------------------------------------------------------------------
// CSV ingestion
// ---------------------------------------------------------------------------

struct DataSet {
    std::vector<double> g0, g1;  // g0 = reference (negative) group
    std::string label0, label1;
};

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string cell;
    std::istringstream in(line);
    while (std::getline(in, cell, ',')) {
        // Trim surrounding whitespace and CR.
        const auto first = cell.find_first_not_of(" \t\r");
        const auto last = cell.find_last_not_of(" \t\r");
        out.push_back(first == std::string::npos
                          ? std::string{}
                          : cell.substr(first, last - first + 1));
    }
    if (!line.empty() && line.back() == ',') out.push_back({});
    return out;
}

}  // namespace detail

// Read a two-group marker table.  The header row is required; the group
// column is string-labelled and `neg_label` picks the reference group.
inline DataSet load_csv(const std::string& path, const std::string& value_col,
                        const std::string& group_col, const std::string& neg_label) {
    std::ifstream in(path);
    if (!in) {
        throw std::runtime_error("cannot open input file: " + path);
    }
    std::string line;
    if (!std::getline(in, line)) {
        throw std::runtime_error("input file is empty: " + path);
    }
    const auto header = detail::split_csv_line(line);
    std::ptrdiff_t vi = -1, gi = -1;
    for (std::size_t j = 0; j < header.size(); ++j) {
        if (header[j] == value_col) vi = static_cast<std::ptrdiff_t>(j);
        if (header[j] == group_col) gi = static_cast<std::ptrdiff_t>(j);
    }
    if (vi < 0) throw std::runtime_error("missing value column '" + value_col + "'");
    if (gi < 0) throw std::runtime_error("missing group column '" + group_col + "'");

    DataSet ds;
    std::vector<std::string> labels;
    std::size_t row = 1;
    while (std::getline(in, line)) {
        ++row;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        const auto cells = detail::split_csv_line(line);
        if (cells.size() <= static_cast<std::size_t>(std::max(vi, gi))) {
            throw std::runtime_error("row " + std::to_string(row) + ": too few columns");
        }
        double v;
        try {
            std::size_t used = 0;
            v = std::stod(cells[vi], &used);
            if (used != cells[vi].size()) throw std::invalid_argument("");
        } catch (const std::exception&) {
            throw std::runtime_error("row " + std::to_string(row) +
                                     ": non-numeric value '" + cells[vi] + "'");
        }
        const std::string& label = cells[gi];
        if (std::find(labels.begin(), labels.end(), label) == labels.end()) {
            labels.push_back(label);
        }
        if (labels.size() > 2) {
            throw std::runtime_error("more than two group labels in '" + group_col + "'");
        }
        if (label == neg_label) {
            ds.g0.push_back(v);
        } else {
            ds.g1.push_back(v);
            ds.label1 = label;
        }
    }
    if (std::find(labels.begin(), labels.end(), neg_label) == labels.end()) {
        throw std::runtime_error("reference label '" + neg_label + "' not present in data");
    }
    if (labels.size() < 2) {
        throw std::runtime_error("only one group label present; two are required");
    }
    ds.label0 = neg_label;
    return ds;
}

// ---------------------------------------------------------------------------
// Analysis pipeline
// ---------------------------------------------------------------------------

struct AnalysisRequest {
    bool log10_scale = false;
    // Headline decision setting; sweeps append further configs.
    std::vector<DecisionConfig> configs = {DecisionConfig{1.0, 3.0, 0.9, 0.1}};
    double interval_lo = 0.005, interval_hi = 0.995;
    double alpha = 0.05;
};

struct ConfigResult {
    DecisionConfig cfg;
    CutoffResult cut;
    CutoffInference inf;
    // Original-scale values when the analysis ran on log10 data.
    std::optional<double> c_star_orig, ci_lo_orig, ci_hi_orig;
};

struct AnalysisReport {
    ModelSelection sel0, sel1;
    ThetaPair theta;
    std::size_t n0 = 0, n1 = 0;
    bool log10_scale = false;
    double alpha = 0.05;
    double auc_value = 0.0;
    AdmissibleInterval interval;
    YoudenResult youden_par, youden_emp;
    std::optional<double> youden_par_orig, youden_emp_orig;
    std::vector<ConfigResult> results;
};

inline AnalysisReport analyze(const DataSet& data, const AnalysisRequest& req) {
    if (data.g0.size() < 20 || data.g1.size() < 20) {
        throw std::runtime_error("each group needs at least 20 observations");
    }
    if (req.configs.empty()) {
        throw std::runtime_error("no decision configuration supplied");
    }
    for (const auto& cfg : req.configs) cfg.validate();

    AnalysisReport rep;
    rep.log10_scale = req.log10_scale;
    rep.alpha = req.alpha;

    std::vector<double> x0 = data.g0, x1 = data.g1;
    if (req.log10_scale) {
        for (auto* v : {&x0, &x1}) {
            for (double& x : *v) {
                if (!(x > 0.0)) {
                    throw std::runtime_error("log10 scale requested but values are not all positive");
                }
                x = std::log10(x);
            }
        }
    }
    rep.n0 = x0.size();
    rep.n1 = x1.size();

    rep.sel0 = select_model(x0);
    rep.sel1 = select_model(x1);
    rep.theta = ThetaPair{rep.sel0.best.spec, rep.sel1.best.spec};

    std::vector<double> pooled = x0;
    pooled.insert(pooled.end(), x1.begin(), x1.end());
    rep.interval = admissible_interval_empirical(pooled, rep.theta, req.configs.front(),
                                                 req.interval_lo, req.interval_hi);
    if (!rep.interval.bracketed) {
        throw std::runtime_error(
            rep.interval.degenerate
                ? "estimating equation is degenerate (indistinguishable groups)"
                : "no bracketed admissible interval for the fitted model");
    }

    rep.auc_value = auc(rep.theta);
    rep.youden_par = youden_parametric(rep.theta, rep.interval.a, rep.interval.b);
    rep.youden_emp = youden_empirical(x0, x1);
    if (req.log10_scale) {
        rep.youden_par_orig = std::pow(10.0, rep.youden_par.c_y);
        rep.youden_emp_orig = std::pow(10.0, rep.youden_emp.c_y);
    }

    const JointCovariance jc = joint_covariance(rep.sel0.best, rep.sel1.best);
    for (const auto& cfg : req.configs) {
        // Each configuration re-verifies bracketing on the same percentile base.
        const auto iv = admissible_interval_empirical(pooled, rep.theta, cfg,
                                                      req.interval_lo, req.interval_hi);
        if (!iv.bracketed) {
            throw std::runtime_error("configuration with ratio " +
                                     std::to_string(cfg.target_ratio()) +
                                     " admits no bracketed interval");
        }
        ConfigResult res;
        res.cfg = cfg;
        res.cut = optimal_cutoff(rep.theta, cfg, iv);
        res.cut.c_youden_emp = rep.youden_emp.c_y;
        res.cut.risk_at_youden_emp = risk(rep.theta, cfg, rep.youden_emp.c_y);
        res.inf = variance_plugin(rep.theta, cfg, res.cut.c_star, jc, req.alpha);
        if (req.log10_scale) {
            res.c_star_orig = std::pow(10.0, res.cut.c_star);
            res.ci_lo_orig = std::pow(10.0, res.inf.ci_lo);
            res.ci_hi_orig = std::pow(10.0, res.inf.ci_hi);
        }
        rep.results.push_back(std::move(res));
    }
    return rep;
}

// Sensitivity sweep over target ratios at fixed prevalences: lambda1 is held
// at 1 and lambda0 chosen so that lambda0 pi0 / (lambda1 pi1) equals each
// requested ratio.
inline AnalysisReport sensitivity(const DataSet& data, AnalysisRequest req,
                                  const std::vector<double>& ratios,
                                  double pi0 = 0.9) {
    if (ratios.empty()) {
        throw std::runtime_error("sensitivity: empty ratio list");
    }
    req.configs.clear();
    for (double r : ratios) {
        if (!(r > 0.0)) throw std::runtime_error("sensitivity: ratios must be positive");
        const double pi1 = 1.0 - pi0;
        req.configs.push_back(DecisionConfig{r * pi1 / pi0, 1.0, pi0, pi1});
    }
    return analyze(data, req);
}

// True when the estimated cutoffs are strictly increasing with target ratio.
inline bool cutoffs_ordered_by_ratio(const AnalysisReport& rep) {
    std::vector<std::pair<double, double>> pairs;
    for (const auto& r : rep.results) {
        pairs.emplace_back(r.cfg.target_ratio(), r.cut.c_star);
    }
    std::sort(pairs.begin(), pairs.end());
    for (std::size_t i = 1; i < pairs.size(); ++i) {
        if (!(pairs[i].second > pairs[i - 1].second)) return false;
    }
    return true;
}

// ---------------------------------------------------------------------------
// JSON report
// ---------------------------------------------------------------------------

namespace detail {

inline nlohmann::json spec_to_json(const DistSpec& spec) {
    nlohmann::json j{{"family", family_name(spec.family)},
                     {"xi", spec.xi},
                     {"omega", spec.omega},
                     {"alpha", spec.alpha}};
    if (spec.family == Family::SkewT) j["nu"] = spec.nu;
    return j;
}

inline nlohmann::json group_to_json(const ModelSelection& sel, std::size_t n) {
    return {{"n", n},
            {"model", spec_to_json(sel.best.spec)},
            {"loglik", sel.best.loglik},
            {"bic", sel.best.bic},
            {"delta_bic", sel.sn_converged && sel.st_converged
                              ? nlohmann::json(sel.delta_bic)
                              : nlohmann::json(nullptr)},
            {"nu_at_boundary", sel.best.nu_at_boundary}};
}

}  // namespace detail

inline nlohmann::json report_to_json(const AnalysisReport& rep) {
    nlohmann::json j;
    j["schema"] = "roc-smsn/1";
    j["log10_scale"] = rep.log10_scale;
    j["alpha"] = rep.alpha;
    j["group0"] = detail::group_to_json(rep.sel0, rep.n0);
    j["group1"] = detail::group_to_json(rep.sel1, rep.n1);
    j["auc"] = rep.auc_value;
    j["admissible_interval"] = {{"a", rep.interval.a},
                                {"b", rep.interval.b},
                                {"bracketed", rep.interval.bracketed},
                                {"expansions", rep.interval.expansions}};
    j["youden"] = {{"parametric", {{"c", rep.youden_par.c_y}, {"j", rep.youden_par.j}}},
                   {"empirical", {{"c", rep.youden_emp.c_y}, {"j", rep.youden_emp.j}}}};
    if (rep.youden_par_orig) j["youden"]["parametric"]["c_original"] = *rep.youden_par_orig;
    if (rep.youden_emp_orig) j["youden"]["empirical"]["c_original"] = *rep.youden_emp_orig;

    j["configs"] = nlohmann::json::array();
    for (const auto& r : rep.results) {
        nlohmann::json c{{"lambda0", r.cfg.lambda0},
                         {"lambda1", r.cfg.lambda1},
                         {"pi0", r.cfg.pi0},
                         {"pi1", r.cfg.pi1},
                         {"target_ratio", r.cfg.target_ratio()},
                         {"c_star", r.cut.c_star},
                         {"risk_at_c_star", r.cut.risk_at_c_star},
                         {"c_youden", r.cut.c_youden},
                         {"risk_at_youden", r.cut.risk_at_youden},
                         {"se", r.inf.se},
                         {"v_hat", r.inf.v_hat},
                         {"ci_lo", r.inf.ci_lo},
                         {"ci_hi", r.inf.ci_hi},
                         {"slope", std::fabs(r.inf.dphi_dc)},
                         {"low_identifiability", r.inf.low_identifiability},
                         {"multi_root", r.cut.multi_root}};
        if (r.cut.c_youden_emp) {
            c["c_youden_emp"] = *r.cut.c_youden_emp;
            c["risk_at_youden_emp"] = *r.cut.risk_at_youden_emp;
        }
        if (r.c_star_orig) {
            c["c_star_original"] = *r.c_star_orig;
            c["ci_lo_original"] = *r.ci_lo_orig;
            c["ci_hi_original"] = *r.ci_hi_orig;
        }
        j["configs"].push_back(std::move(c));
    }
    return j;
}

// ---------------------------------------------------------------------------
// Plot-data emitters (data only; rendering is external)
// ---------------------------------------------------------------------------

// Fitted densities on a 512-point grid spanning the admissible interval,
// with the decision thresholds echoed in the header comment line.
inline std::string densities_csv(const AnalysisReport& rep) {
    std::ostringstream out;
    out.precision(10);
    out << "# c_star";
    for (const auto& r : rep.results) out << ' ' << r.cut.c_star;
    out << " youden " << rep.youden_par.c_y << '\n';
    out << "x,f0,f1\n";
    const double a = rep.interval.a, b = rep.interval.b;
    for (int i = 0; i < 512; ++i) {
        const double x = a + (b - a) * i / 511.0;
        out << x << ',' << pdf(rep.theta.d0, x) << ',' << pdf(rep.theta.d1, x) << '\n';
    }
    return out.str();
}

// ROC curve with one tangent line per decision configuration, anchored at the
// operating point (FPF(c*), TPF(c*)) with slope equal to the target ratio.
inline std::string roc_tangents_csv(const AnalysisReport& rep, int h = 512) {
    std::ostringstream out;
    out.precision(10);
    out << "kind,fpf,tpf,slope\n";
    const RocCurve curve = make_roc_curve(rep.theta, h);
    for (const auto& p : curve.points) {
        out << "roc," << p.fpf << ',' << p.tpf << ",\n";
    }
    for (const auto& r : rep.results) {
        const double fpf = 1.0 - cdf(rep.theta.d0, r.cut.c_star);
        const double tpf = 1.0 - cdf(rep.theta.d1, r.cut.c_star);
        out << "tangent," << fpf << ',' << tpf << ',' << r.cfg.target_ratio() << '\n';
    }
    return out.str();
}

}  // namespace rocsmsn
