#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "sem/basis.hpp"
#include "sem/matching.hpp"
#include "sem/systems.hpp"

namespace sem {

/// Resolved settings for one CLI run.  Fields marked "auto" (-1 / 0 / empty)
/// are filled from the chosen system's defaults by `resolve`.
struct ExperimentConfig {
    std::string system = "pendulum";  ///< pendulum | ddm | external
    std::string input;                ///< observations CSV when system = external
    int n = 150;                      ///< observations per channel
    double gamma = 0.05;              ///< noise scale
    std::uint64_t seed = 1;
    int replicates = 1;
    int K = 2;
    int q = 0;             ///< smoothing penalty order; 0 -> K
    int basis_degree = -1; ///< -1 -> system default (pendulum 4, ddm/external 1)
    int basis_trig = -1;   ///< -1 auto (pendulum on, else off), 0 off, 1 on
    bool basis_time = false;
    std::string method = "sem";  ///< sem | sindy | both
    int match_k = -1;            ///< matching order; -1 -> K
    int quad_nodes = 0;          ///< 0 -> one node per observation time
    int n_lambda = 50;
    double lambda_min_ratio = 1e-2;
    int n_folds = 10;
    int workers = 1;
    std::string outdir = "out";
    std::vector<int> tau1, tau2;  ///< within-cluster coupling permutations (1-based)

    int deriv_order = -1;  ///< smooth export derivative order; -1 -> min(K, 2q-2)
    int resample = 0;      ///< smooth export grid size; 0 -> 4n

    double train_end = 4.0;      ///< prediction training window [0, train_end)
    double predict_dt = 0.015625;
    int n_validation = 512;

    std::string model_dir;     ///< infer: subject models
    std::string baseline_dir;  ///< infer: optional baseline subjects
    double alpha = 0.05;

    std::string metrics_dir;  ///< report: tree of metrics.json files
};

/// Validate and fill auto fields; throws config_error on inconsistencies.
ExperimentConfig resolve(ExperimentConfig cfg);

/// Build the configured system (pendulum or ddm); throws config_error otherwise.
OdeSystem make_system(const ExperimentConfig& cfg);

/// Feature library per the resolved basis settings.
BasisLibrary make_library(const ExperimentConfig& cfg, int p);

/// Per-replicate fit results with evaluation metrics (NaN when no truth).
struct ReplicateResult {
    int replicate = 0;
    std::vector<SparseSolution> sem, sindy;
    double rer_sem = 0, rer_sindy = 0;
    double ma_sem = 0, ma_sindy = 0;
};

/// Simulate (or load), smooth, fit, and score one replicate.  Replicate index
/// shifts the seed; the pendulum redraws its initial condition per replicate.
ReplicateResult run_replicate(const ExperimentConfig& cfg, int replicate);

/// Command entry points; all return 0 and throw config_error / numeric_error
/// on failure (the CLI maps these to exit codes 2 / 3).
int cmd_simulate(const ExperimentConfig& cfg);
int cmd_smooth(const ExperimentConfig& cfg);
int cmd_discover(const ExperimentConfig& cfg);
int cmd_predict(const ExperimentConfig& cfg);
int cmd_infer(const ExperimentConfig& cfg);
int cmd_report(const ExperimentConfig& cfg);

}  // namespace sem
