#include <iostream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "sem/errors.hpp"
#include "sem/pipeline.hpp"

namespace {

nlohmann::json resolved_to_json(const sem::ExperimentConfig& cfg) {
    nlohmann::json j;
    j["system"] = cfg.system;
    j["input"] = cfg.input;
    j["n"] = cfg.n;
    j["gamma"] = cfg.gamma;
    j["seed"] = cfg.seed;
    j["replicates"] = cfg.replicates;
    j["K"] = cfg.K;
    j["q"] = cfg.q;
    j["basis_degree"] = cfg.basis_degree;
    j["basis_trig"] = cfg.basis_trig != 0;
    j["basis_time"] = cfg.basis_time;
    j["method"] = cfg.method;
    j["match_k"] = cfg.match_k;
    j["quad_nodes"] = cfg.quad_nodes;
    j["n_lambda"] = cfg.n_lambda;
    j["lambda_min_ratio"] = cfg.lambda_min_ratio;
    j["n_folds"] = cfg.n_folds;
    j["workers"] = cfg.workers;
    j["outdir"] = cfg.outdir;
    j["tau1"] = cfg.tau1;
    j["tau2"] = cfg.tau2;
    j["deriv_order"] = cfg.deriv_order;
    j["resample"] = cfg.resample;
    j["train_end"] = cfg.train_end;
    j["predict_dt"] = cfg.predict_dt;
    j["n_validation"] = cfg.n_validation;
    j["model_dir"] = cfg.model_dir;
    j["baseline_dir"] = cfg.baseline_dir;
    j["alpha"] = cfg.alpha;
    j["metrics_dir"] = cfg.metrics_dir;
    return j;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"sparse equation matching: ODE discovery from noisy trajectories"};
    app.require_subcommand(1);
    app.set_config("--config", "", "read options from a key-value config file");
    app.fallthrough();

    sem::ExperimentConfig cfg;
    bool print_config = false;

    app.add_option("--system", cfg.system, "pendulum | ddm | external")
        ->capture_default_str();
    app.add_option("--input", cfg.input, "observations CSV (system external)");
    app.add_option("-n,--n", cfg.n, "observations per channel")->capture_default_str();
    app.add_option("--gamma", cfg.gamma, "noise scale")->capture_default_str();
    app.add_option("--seed", cfg.seed, "RNG seed")->capture_default_str();
    app.add_option("-S,--replicates", cfg.replicates, "replicate count")
        ->capture_default_str();
    app.add_option("-K,--order", cfg.K, "equation order")->capture_default_str();
    app.add_option("-q,--penalty-order", cfg.q, "smoothing penalty order (0 = K)")
        ->capture_default_str();
    app.add_option("--basis-degree", cfg.basis_degree,
                   "polynomial degree (-1 = system default)");
    app.add_option("--basis-trig", cfg.basis_trig, "sin/cos features (-1 auto, 0, 1)");
    app.add_flag("--basis-time", cfg.basis_time, "include t as a basis variable");
    app.add_option("--method", cfg.method, "sem | sindy | both")->capture_default_str();
    app.add_option("-k,--match-k", cfg.match_k, "matching order (-1 = K)");
    app.add_option("--quad-nodes", cfg.quad_nodes, "quadrature nodes (0 = auto)");
    app.add_option("--n-lambda", cfg.n_lambda, "lambda grid size")->capture_default_str();
    app.add_option("--lambda-min-ratio", cfg.lambda_min_ratio, "grid floor ratio")
        ->capture_default_str();
    app.add_option("--folds", cfg.n_folds, "cross-validation folds")->capture_default_str();
    app.add_option("-j,--workers", cfg.workers, "worker threads (0 = hardware)")
        ->capture_default_str();
    app.add_option("-o,--outdir", cfg.outdir, "output directory")->capture_default_str();
    app.add_option("--tau1", cfg.tau1, "cluster-1 coupling permutation (1-based)")
        ->delimiter(',');
    app.add_option("--tau2", cfg.tau2, "cluster-2 coupling permutation (1-based)")
        ->delimiter(',');
    app.add_option("--deriv-order", cfg.deriv_order,
                   "smooth export derivative order (-1 auto)");
    app.add_option("--resample", cfg.resample, "smooth export grid size (0 = 4n)");
    app.add_option("--train-end", cfg.train_end, "prediction training window end")
        ->capture_default_str();
    app.add_option("--dt", cfg.predict_dt, "one-step prediction horizon")
        ->capture_default_str();
    app.add_option("--n-validation", cfg.n_validation, "validation points")
        ->capture_default_str();
    app.add_option("--model-dir", cfg.model_dir, "subject model directory (infer)");
    app.add_option("--baseline-dir", cfg.baseline_dir, "baseline model directory (infer)");
    app.add_option("--alpha", cfg.alpha, "FDR level")->capture_default_str();
    app.add_option("--metrics-dir", cfg.metrics_dir, "metrics tree to aggregate (report)");
    app.add_flag("--print-config", print_config, "print the resolved config and exit");

    CLI::App* sub_simulate = app.add_subcommand("simulate", "integrate and add noise");
    CLI::App* sub_smooth = app.add_subcommand("smooth", "penalized spline smoothing");
    CLI::App* sub_discover = app.add_subcommand("discover", "fit sparse equations");
    CLI::App* sub_predict = app.add_subcommand("predict", "one-step-ahead validation");
    CLI::App* sub_infer = app.add_subcommand("infer", "population network inference");
    CLI::App* sub_report = app.add_subcommand("report", "aggregate replicate metrics");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (print_config) {
            std::cout << resolved_to_json(sem::resolve(cfg)).dump(2) << '\n';
            return 0;
        }
        if (*sub_simulate) return sem::cmd_simulate(cfg);
        if (*sub_smooth) return sem::cmd_smooth(cfg);
        if (*sub_discover) return sem::cmd_discover(cfg);
        if (*sub_predict) return sem::cmd_predict(cfg);
        if (*sub_infer) return sem::cmd_infer(cfg);
        if (*sub_report) return sem::cmd_report(cfg);
        std::cerr << "no command given\n";
        return 2;
    } catch (const sem::config_error& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 2;
    } catch (const sem::numeric_error& e) {
        std::cerr << "numeric failure: " << e.what() << '\n';
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 3;
    }
}
