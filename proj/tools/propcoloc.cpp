#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "propcoloc/calibration.hpp"
#include "propcoloc/errors.hpp"
#include "propcoloc/joint_effects.hpp"
#include "propcoloc/selective.hpp"
#include "propcoloc/sim.hpp"
#include "propcoloc/summary_data.hpp"

namespace {

constexpr const char* kVersion = "0.1.0";
constexpr int kExitInput = 2;
constexpr int kExitDegenerate = 3;

using nlohmann::json;
using namespace propcoloc;

std::vector<test_method> parse_methods(const std::string& csv) {
    std::vector<test_method> out;
    std::stringstream ss(csv);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
        if (tok == "full") out.push_back(test_method::full);
        else if (tok == "naive") out.push_back(test_method::naive);
        else if (tok == "cond") out.push_back(test_method::conditional);
        else if (tok == "lm") out.push_back(test_method::lm);
        else throw input_error("unknown method: " + tok);
    }
    if (out.empty()) throw input_error("no methods requested");
    return out;
}

json result_to_json(const test_result& r) {
    json out;
    out["method"] = method_name(r.method);
    out["statistic"] = r.statistic;
    out["df_or_critical"] = r.df_or_critical;
    out["p_value"] = r.p_value;
    if (r.eta_hat) out["eta_hat"] = *r.eta_hat;
    out["reject"] = r.reject;
    out["diagnostics"] = r.diagnostics;
    return out;
}

struct test_options {
    std::string assoc, ld, out, methods_csv = "full,naive,cond,lm";
    long long n = 0;
    double trait_cor = 0.0;
    double prune_r2 = 0.6;
    int top_k = 10;
    double alpha = 0.05;
    long long draws = 10000;
    std::optional<std::uint64_t> seed;
    bool as_json = false, as_tsv = false;
};

int cmd_test(const test_options& opt) {
    const std::uint64_t seed =
        opt.seed ? *opt.seed : std::random_device{}();
    const auto methods = parse_methods(opt.methods_csv);

    summary_dataset ds = load_summary(opt.assoc, opt.ld, opt.trait_cor, opt.n);
    const int input_variants = ds.num_variants();

    auto [ordered, swapped] = order_traits(ds);
    ds = std::move(ordered);
    int pruned_removed = 0, topk_removed = 0;
    if (opt.prune_r2 > 0.0) {
        const int before = ds.num_variants();
        ds = prune(ds, opt.prune_r2);
        pruned_removed = before - ds.num_variants();
    }
    if (opt.top_k > 0) {
        const int before = ds.num_variants();
        ds = select_top_k(ds, opt.top_k);
        topk_removed = before - ds.num_variants();
    }
    joint_effects je = to_joint_effects(ds);
    selection_context sel = build_selection(je);

    json report;
    report["schema_version"] = 1;
    report["tool_version"] = kVersion;
    report["seed"] = seed;
    report["config"] = {{"assoc", opt.assoc},     {"ld", opt.ld},
                        {"n", opt.n},             {"trait_cor", opt.trait_cor},
                        {"prune_r2", opt.prune_r2}, {"top_k", opt.top_k},
                        {"alpha", opt.alpha},     {"draws", opt.draws},
                        {"methods", opt.methods_csv}};
    report["preprocessing"] = {
        {"input_variants", input_variants},
        {"trait_swapped", swapped},
        {"pruned_removed", pruned_removed},
        {"top_k_removed", topk_removed},
        {"tested_variants", ds.num_variants()},
        {"lead_variant_trait1", je.variant_ids[sel.j_star]},
        {"lead_variant_trait2", je.variant_ids[sel.j_star_star]}};

    std::optional<test_result> cond_res, lm_res;
    json results = json::array();
    for (test_method m : methods) {
        test_result r;
        switch (m) {
            case test_method::full: r = prop_coloc_full(je, opt.alpha); break;
            case test_method::naive: r = prop_coloc_naive(je, sel, opt.alpha); break;
            case test_method::conditional:
                r = prop_coloc_cond(je, opt.alpha, opt.draws, seed);
                cond_res = r;
                break;
            case test_method::lm:
                r = lm_test(je, sel, opt.alpha);
                lm_res = r;
                break;
        }
        results.push_back(result_to_json(r));
    }
    report["results"] = results;
    if (cond_res && lm_res) {
        report["verdict"] =
            verdict_name(combined_verdict(*cond_res, *lm_res, opt.alpha));
    } else if (lm_res && lm_res->p_value >= opt.alpha) {
        // An LM retain alone settles the verdict: no trait-1 signal means
        // proportional colocalization is rejected whatever the other tests say.
        report["verdict"] = verdict_name(verdict::reject_no_trait1_signal);
    }

    std::ostringstream body;
    if (opt.as_json) {
        body << report.dump(2) << '\n';
    } else if (opt.as_tsv) {
        body << "method\tstatistic\tdf_or_critical\tp_value\teta_hat\treject\n";
        for (const auto& r : results) {
            char buf[256];
            std::snprintf(buf, sizeof(buf), "%s\t%.10g\t%.10g\t%.10g\t%s\t%d\n",
                          r.at("method").get<std::string>().c_str(),
                          r.at("statistic").get<double>(),
                          r.at("df_or_critical").get<double>(),
                          r.at("p_value").get<double>(),
                          r.contains("eta_hat")
                              ? std::to_string(r.at("eta_hat").get<double>()).c_str()
                              : "NA",
                          r.at("reject").get<bool>() ? 1 : 0);
            body << buf;
        }
    } else {
        body << "proportional colocalization tests (alpha = " << opt.alpha
             << ", seed = " << seed << ")\n";
        body << "variants tested: " << ds.num_variants() << " of "
             << input_variants << " (trait swap: " << (swapped ? "yes" : "no")
             << ", leads: " << je.variant_ids[sel.j_star] << ", "
             << je.variant_ids[sel.j_star_star] << ")\n\n";
        char buf[256];
        std::snprintf(buf, sizeof(buf), "%-8s %12s %14s %10s %10s  %s\n",
                      "method", "statistic", "df/critical", "p-value",
                      "eta-hat", "decision");
        body << buf;
        for (const auto& r : results) {
            std::snprintf(buf, sizeof(buf), "%-8s %12.5g %14.5g %10.4g %10s  %s\n",
                          r.at("method").get<std::string>().c_str(),
                          r.at("statistic").get<double>(),
                          r.at("df_or_critical").get<double>(),
                          r.at("p_value").get<double>(),
                          r.contains("eta_hat")
                              ? std::to_string(r.at("eta_hat").get<double>()).c_str()
                              : "NA",
                          r.at("reject").get<bool>() ? "reject" : "retain");
            body << buf;
        }
        if (report.contains("verdict"))
            body << "\ncombined verdict: "
                 << report.at("verdict").get<std::string>() << '\n';
    }

    if (!opt.out.empty()) {
        std::ofstream f(opt.out);
        if (!f) throw input_error("cannot write output file: " + opt.out);
        f << body.str();
    } else {
        std::cout << body.str();
    }
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"frequentist proportional colocalization tests from GWAS "
                 "summary statistics"};
    app.set_version_flag("--version", kVersion);
    app.require_subcommand(1);

    test_options topt;
    auto* test = app.add_subcommand(
        "test", "run colocalization tests on summary data");
    test->add_option("--assoc", topt.assoc,
                     "association TSV (variant_id beta1 se1 beta2 se2)")
        ->required();
    test->add_option("--ld", topt.ld, "LD correlation matrix file")->required();
    test->add_option("--n", topt.n, "GWAS sample size")->required();
    test->add_option("--trait-cor", topt.trait_cor,
                     "correlation between the two traits")
        ->required();
    test->add_option("--prune-r2", topt.prune_r2,
                     "pruning threshold on squared correlation (0 disables)");
    test->add_option("--top-k", topt.top_k,
                     "keep the union of top-k variants per trait (0 disables)");
    test->add_option("--alpha", topt.alpha, "test level");
    test->add_option("--draws", topt.draws,
                     "Monte-Carlo draws for the conditional critical value");
    std::uint64_t seed_value = 0;
    auto* seed_opt = test->add_option("--seed", seed_value, "RNG seed");
    test->add_option("--methods", topt.methods_csv,
                     "comma list from full,naive,cond,lm");
    test->add_flag("--json", topt.as_json, "emit the full JSON report");
    test->add_flag("--tsv", topt.as_tsv, "emit a machine-readable TSV");
    test->add_option("--out", topt.out, "write output to a file");

    std::string grid_path, sim_out;
    int parallel = 1;
    std::uint64_t sim_seed = 0;
    auto* simulate = app.add_subcommand(
        "simulate", "run rejection-frequency experiments over a grid");
    simulate->add_option("--grid", grid_path, "JSON array of grid configs")
        ->required();
    simulate->add_option("--out", sim_out, "output TSV path")->required();
    simulate->add_option("--parallel", parallel, "worker threads");
    auto* sim_seed_opt =
        simulate->add_option("--seed", sim_seed, "override all config seeds");

    std::string suite = "all";
    std::uint64_t cal_seed = 20240501;
    auto* calibrate = app.add_subcommand(
        "calibrate", "run the numerical oracle suites");
    calibrate->add_option("--suite", suite, "chisq|cstar|optimizer|all");
    calibrate->add_option("--seed", cal_seed, "RNG seed");

    CLI11_PARSE(app, argc, argv);

    try {
        if (test->parsed()) {
            if (!seed_opt->empty()) topt.seed = seed_value;
            return cmd_test(topt);
        }
        if (simulate->parsed()) {
            auto grid = load_grid(grid_path);
            if (!sim_seed_opt->empty())
                for (auto& c : grid) c.seed = sim_seed;
            rejection_table table = run_experiment(
                grid,
                {test_method::full, test_method::naive,
                 test_method::conditional},
                parallel);
            std::ofstream f(sim_out);
            if (!f) throw input_error("cannot write output file: " + sim_out);
            f << table.to_tsv();
            return 0;
        }
        if (calibrate->parsed()) {
            calibration_report report = run_suite(suite, cal_seed);
            std::cout << report.to_text();
            return report.all_pass() ? 0 : 1;
        }
    } catch (const input_error& e) {
        std::cerr << "input error: " << e.what() << '\n';
        return kExitInput;
    } catch (const degeneracy_error& e) {
        std::cerr << "degeneracy: " << e.what() << '\n';
        return kExitDegenerate;
    }
    return 0;
}
