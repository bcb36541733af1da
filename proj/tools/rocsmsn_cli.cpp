// Command-line front end: cutoff analysis, sensitivity sweeps, simulation
// runs, and plot-data extraction for two-group biomarker data.
//
// Exit codes: 0 success, 2 input error, 3 numerical failure,
// 4 validation-band failure in simulate.

#include <CLI11.hpp>

#include <cmath>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "rocsmsn/analysis.hpp"
#include "rocsmsn/scenario_io.hpp"

namespace {

constexpr int kExitInput = 2;
constexpr int kExitNumerical = 3;
constexpr int kExitBands = 4;

struct InputFlags {
    std::string input;
    std::string value_col = "value";
    std::string group_col = "group";
    std::string neg_label;
    bool use_log10 = false;
};

void add_input_flags(CLI::App* cmd, InputFlags& in) {
    cmd->add_option("--input", in.input, "CSV file with value and group columns")
        ->required();
    cmd->add_option("--value-col", in.value_col, "name of the marker column");
    cmd->add_option("--group-col", in.group_col, "name of the group-label column");
    cmd->add_option("--neg-label", in.neg_label,
                    "group label of the reference (non-diseased) class")
        ->required();
    cmd->add_flag("--log10", in.use_log10, "analyse log10-transformed values");
}

void write_output(const std::string& out_path, const std::string& content) {
    if (out_path.empty() || out_path == "-") {
        std::cout << content;
        return;
    }
    std::ofstream out(out_path);
    if (!out) {
        throw std::runtime_error("cannot write output file: " + out_path);
    }
    out << content;
}

// Numerical failures (unbracketed intervals, degenerate estimating equations,
// non-convergent fits, singular information) surface as runtime_error from
// the library; everything else at this level is an input problem.
int classify_error(const std::exception& e) {
    const std::string what = e.what();
    for (const char* tag :
         {"bracket", "degenerate", "converge", "singular", "variance",
          "flat estimating", "positive definite"}) {
        if (what.find(tag) != std::string::npos) return kExitNumerical;
    }
    return kExitInput;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Decision-theoretic ROC cutoff analysis for skewed biomarkers"};
    app.require_subcommand(1);

    InputFlags in;
    double lambda0 = 1.0, lambda1 = 3.0, pi0 = 0.9, alpha = 0.05;
    std::string out_path;
    std::vector<double> ratios = {1.0, 3.0, 9.0, 27.0};
    std::vector<std::string> scenario_names;
    std::string scenario_file, kind = "densities", scenario_name = "SN1";
    std::size_t b = 500, n = 400;
    std::uint64_t seed = 20240901;

    auto add_decision_flags = [&](CLI::App* cmd) {
        cmd->add_option("--lambda0", lambda0, "cost of a false positive");
        cmd->add_option("--lambda1", lambda1, "cost of a false negative");
        cmd->add_option("--pi0", pi0, "prevalence of the reference class")
            ->check(CLI::Range(1e-12, 1.0 - 1e-12));
        cmd->add_option("--alpha", alpha, "two-sided CI level complement")
            ->check(CLI::Range(1e-6, 0.5));
    };

    auto* analyze_cmd = app.add_subcommand(
        "analyze", "fit both groups and estimate the optimal cutoff");
    add_input_flags(analyze_cmd, in);
    add_decision_flags(analyze_cmd);
    analyze_cmd->add_option("--out", out_path, "JSON report path (default stdout)");

    auto* fit_cmd = app.add_subcommand(
        "fit", "per-group model fits and selection only");
    add_input_flags(fit_cmd, in);
    fit_cmd->add_option("--out", out_path, "JSON output path (default stdout)");

    auto* sens_cmd = app.add_subcommand(
        "sensitivity", "cutoffs across a sweep of cost-prevalence ratios");
    add_input_flags(sens_cmd, in);
    add_decision_flags(sens_cmd);
    sens_cmd->add_option("--ratios", ratios, "target ratios to sweep");
    sens_cmd->add_option("--out", out_path, "JSON report path (default stdout)");

    auto* sim_cmd = app.add_subcommand(
        "simulate", "Monte Carlo validation of cutoff estimation");
    sim_cmd->add_option("--scenario", scenario_names,
                        "scenario names (default: all)");
    sim_cmd->add_option("--scenario-file", scenario_file,
                        "JSON scenario definitions (default: built in)");
    sim_cmd->add_option("--b", b, "replications per scenario");
    sim_cmd->add_option("--n", n, "total sample size per replication");
    sim_cmd->add_option("--seed", seed, "master seed");
    sim_cmd->add_option("--out", out_path, "summary CSV path (default stdout)");

    auto* plot_cmd = app.add_subcommand("plotdata", "CSV data for plots");
    plot_cmd->add_option("--kind", kind, "densities | roc-tangents | qq")
        ->check(CLI::IsMember({"densities", "roc-tangents", "qq"}));
    plot_cmd->add_option("--input", in.input, "CSV input (densities, roc-tangents)");
    plot_cmd->add_option("--value-col", in.value_col, "name of the marker column");
    plot_cmd->add_option("--group-col", in.group_col, "name of the group-label column");
    plot_cmd->add_option("--neg-label", in.neg_label, "reference group label");
    plot_cmd->add_flag("--log10", in.use_log10, "analyse log10-transformed values");
    add_decision_flags(plot_cmd);
    plot_cmd->add_option("--scenario", scenario_name, "scenario name (qq kind)");
    plot_cmd->add_option("--b", b, "replications (qq kind)");
    plot_cmd->add_option("--n", n, "total sample size (qq kind)");
    plot_cmd->add_option("--seed", seed, "master seed (qq kind)");
    plot_cmd->add_option("--out", out_path, "output path (default stdout)");

    CLI11_PARSE(app, argc, argv);

    using namespace rocsmsn;

    auto make_request = [&]() {
        AnalysisRequest req;
        req.log10_scale = in.use_log10;
        req.alpha = alpha;
        req.configs = {DecisionConfig{lambda0, lambda1, pi0, 1.0 - pi0}};
        return req;
    };
    auto load_input = [&]() {
        if (in.neg_label.empty()) {
            throw std::runtime_error("--neg-label is required for this kind");
        }
        return load_csv(in.input, in.value_col, in.group_col, in.neg_label);
    };

    try {
        if (analyze_cmd->parsed()) {
            const auto rep = analyze(load_input(), make_request());
            write_output(out_path, report_to_json(rep).dump(2) + "\n");
        } else if (fit_cmd->parsed()) {
            const auto ds = load_input();
            const auto req = make_request();
            std::vector<double> x0 = ds.g0, x1 = ds.g1;
            if (req.log10_scale) {
                for (auto* v : {&x0, &x1}) {
                    for (double& x : *v) {
                        if (!(x > 0.0)) {
                            throw std::runtime_error(
                                "log10 scale requested but values are not all positive");
                        }
                        x = std::log10(x);
                    }
                }
            }
            nlohmann::json j;
            j["schema"] = "roc-smsn/1";
            j["log10_scale"] = req.log10_scale;
            j["group0"] = rocsmsn::detail::group_to_json(select_model(x0), x0.size());
            j["group1"] = rocsmsn::detail::group_to_json(select_model(x1), x1.size());
            write_output(out_path, j.dump(2) + "\n");
        } else if (sens_cmd->parsed()) {
            const auto rep = sensitivity(load_input(), make_request(), ratios, pi0);
            auto j = report_to_json(rep);
            j["ordered_by_ratio"] = cutoffs_ordered_by_ratio(rep);
            write_output(out_path, j.dump(2) + "\n");
        } else if (sim_cmd->parsed()) {
            auto all = scenario_file.empty() ? builtin_scenarios(n, b, seed)
                                             : load_scenarios_file(scenario_file);
            for (auto& sc : all) {
                sc.n_total = n;
                sc.replications = b;
                sc.seed = seed;
            }
            std::vector<ScenarioSpec> chosen;
            if (scenario_names.empty()) {
                chosen = all;
            } else {
                for (const auto& name : scenario_names) {
                    auto it = std::find_if(all.begin(), all.end(),
                                           [&](const auto& s) { return s.name == name; });
                    if (it == all.end()) {
                        throw std::runtime_error("unknown scenario: " + name);
                    }
                    chosen.push_back(*it);
                }
            }
            std::vector<ScenarioSummary> summaries;
            bool bands_ok = true;
            for (const auto& sc : chosen) {
                summaries.push_back(run_scenario(sc));
                const auto& s = summaries.back();
                const auto bands = check_bands(s);
                bands_ok = bands_ok && bands.all_ok();
                std::cerr << s.name << ": succ=" << s.success_rate
                          << " bias=" << s.bias << " ratio=" << s.ratio
                          << " cov=" << s.coverage << " bracket=" << s.bracket_rate
                          << (bands.all_ok() ? "" : "  [bands FAILED]") << '\n';
            }
            write_output(out_path, summaries_to_csv(summaries));
            if (!bands_ok) return kExitBands;
        } else if (plot_cmd->parsed()) {
            if (kind == "qq") {
                auto all = builtin_scenarios(n, b, seed);
                auto it = std::find_if(all.begin(), all.end(), [&](const auto& s) {
                    return s.name == scenario_name;
                });
                if (it == all.end()) {
                    throw std::runtime_error("unknown scenario: " + scenario_name);
                }
                write_output(out_path, wn_to_csv(run_scenario(*it)));
            } else {
                if (in.input.empty()) {
                    throw std::runtime_error("--input is required for this kind");
                }
                const auto rep = analyze(load_input(), make_request());
                write_output(out_path, kind == "densities" ? densities_csv(rep)
                                                           : roc_tangents_csv(rep));
            }
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return classify_error(e);
    }
    return 0;
}
