#include "sem/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <thread>
#include <tuple>

#include "sem/csv.hpp"
#include "sem/errors.hpp"
#include "sem/evaluation.hpp"
#include "sem/inference.hpp"
#include "sem/parallel.hpp"
#include "sem/smoothing.hpp"

namespace fs = std::filesystem;

namespace sem {

namespace {

std::string rep_name(int r) {
    char buf[16];
    std::snprintf(buf, sizeof buf, "rep%03d", r);
    return buf;
}

std::string eq_name(int i) {
    char buf[16];
    std::snprintf(buf, sizeof buf, "eq%03d.json", i);
    return buf;
}

std::string hash_hex(std::uint64_t h) {
    char buf[20];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

void write_json_file(const fs::path& path, const nlohmann::json& j) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
    out << j.dump(2) << '\n';
    if (!out) throw std::runtime_error("failed writing " + path.string());
}

nlohmann::json config_echo(const ExperimentConfig& cfg) {
    nlohmann::json j;
    j["system"] = cfg.system;
    if (!cfg.input.empty()) j["input"] = cfg.input;
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
    j["train_end"] = cfg.train_end;
    j["predict_dt"] = cfg.predict_dt;
    j["n_validation"] = cfg.n_validation;
    j["alpha"] = cfg.alpha;
    if (!cfg.tau1.empty()) j["tau1"] = cfg.tau1;
    if (!cfg.tau2.empty()) j["tau2"] = cfg.tau2;
    return j;
}

// run manifest: resolved config plus a content hash per output file
class Manifest {
  public:
    Manifest(fs::path root, const std::string& command, const ExperimentConfig& cfg)
        : root_(std::move(root)) {
        j_["command"] = command;
        j_["config"] = config_echo(cfg);
        j_["outputs"] = nlohmann::json::object();
    }

    void add(const fs::path& path) {
        const std::string rel = fs::relative(path, root_).generic_string();
        j_["outputs"][rel] = hash_hex(fnv1a_file(path.string()));
    }

    void write() { write_json_file(root_ / "manifest.json", j_); }

  private:
    fs::path root_;
    nlohmann::json j_;
};

struct ReplicateData {
    NoisyObservations obs;
    std::optional<OdeSystem> truth;
    std::optional<TrajectorySet> traj;
};

std::uint64_t noise_seed(const ExperimentConfig& cfg, int replicate) {
    return cfg.seed + static_cast<std::uint64_t>(replicate - 1);
}

ReplicateData make_observations(const ExperimentConfig& cfg, int replicate) {
    ReplicateData data;
    if (cfg.system == "external") {
        TimeSeriesCsv csv = read_time_series(cfg.input);
        if (csv.times.size() < 4)
            throw config_error(cfg.input + ": too few observations");
        data.obs.grid = make_grid(csv.times, csv.times[csv.times.size() - 1]);
        data.obs.values = csv.values;
        data.obs.sigma = Eigen::VectorXd::Zero(csv.values.rows());
        data.obs.gamma = 0.0;
        data.obs.seed = 0;
        return data;
    }
    OdeSystem sys = make_system(cfg);
    if (cfg.system == "pendulum")
        sys.init = pendulum_random_init(noise_seed(cfg, replicate) ^ 0x9e3779b97f4a7c15ull);
    const SimulationGrid grid = make_grid(cfg.n, sys.horizon);
    TrajectorySet traj = integrate(sys, grid);
    data.obs = add_noise(traj, cfg.gamma, noise_seed(cfg, replicate));
    data.truth = std::move(sys);
    data.traj = std::move(traj);
    return data;
}

QuadratureRule make_rule(const ExperimentConfig& cfg, double horizon, int n_obs) {
    if (cfg.quad_nodes > 0) return trapezoid_rule(make_grid(cfg.quad_nodes, horizon));
    return default_quadrature(horizon, n_obs);
}

double mean_of(const std::vector<double>& xs) {
    double s = 0.0;
    for (double x : xs) s += x;
    return s / xs.size();
}

double se_of(const std::vector<double>& xs) {
    const int n = static_cast<int>(xs.size());
    if (n < 2) return 0.0;
    const double m = mean_of(xs);
    double ss = 0.0;
    for (double x : xs) ss += (x - m) * (x - m);
    return std::sqrt(ss / (n - 1) / n);
}

}  // namespace

ExperimentConfig resolve(ExperimentConfig cfg) {
    if (cfg.system != "pendulum" && cfg.system != "ddm" && cfg.system != "external")
        throw config_error("unknown system '" + cfg.system + "'");
    if (cfg.system == "external") {
        if (cfg.input.empty()) throw config_error("system external needs an input CSV");
        if (!fs::exists(cfg.input)) throw config_error("input file not found: " + cfg.input);
        if (cfg.replicates != 1)
            throw config_error("external data provides a single replicate");
    } else {
        if (!cfg.input.empty()) throw config_error("input is only used with system external");
        if (cfg.K != 2) throw config_error(cfg.system + " is second-order; set K = 2");
    }
    if (cfg.system != "ddm" && (!cfg.tau1.empty() || !cfg.tau2.empty()))
        throw config_error("tau permutations apply to the ddm system only");
    if (cfg.n < 4) throw config_error("need at least 4 observations per channel");
    if (!(cfg.gamma >= 0)) throw config_error("gamma must be >= 0");
    if (cfg.replicates < 1) throw config_error("replicates must be >= 1");
    if (cfg.K < 1) throw config_error("K must be >= 1");
    if (cfg.q == 0) cfg.q = cfg.K;
    if (cfg.q < 1 || cfg.q > 6) throw config_error("q must be in 1..6");
    if (cfg.n < 2 * cfg.q) throw config_error("need n >= 2q observations");
    if (cfg.basis_degree < 0) cfg.basis_degree = cfg.system == "pendulum" ? 4 : 1;
    if (cfg.basis_degree < 1) throw config_error("basis degree must be >= 1");
    if (cfg.basis_trig < 0) cfg.basis_trig = cfg.system == "pendulum" ? 1 : 0;
    if (cfg.basis_trig > 1) throw config_error("basis_trig must be 0 or 1");
    if (cfg.method != "sem" && cfg.method != "sindy" && cfg.method != "both")
        throw config_error("method must be sem, sindy, or both");
    if (cfg.match_k < 0) cfg.match_k = cfg.K;
    const int max_curve_deriv = 2 * cfg.q - 2;
    if (cfg.method != "sindy" && cfg.match_k < cfg.K && cfg.K - cfg.match_k > max_curve_deriv)
        throw config_error("matching order k needs derivatives beyond the smoother; increase q");
    if (cfg.method != "sem" && cfg.K > max_curve_deriv)
        throw config_error("gradient matching needs the order-K derivative; increase q");
    if (cfg.K - 1 > max_curve_deriv)
        throw config_error("state reconstruction needs derivatives to order K-1; increase q");
    if (cfg.quad_nodes != 0 && cfg.quad_nodes < 16)
        throw config_error("quad_nodes must be 0 (auto) or >= 16");
    if (cfg.n_lambda < 1) throw config_error("n_lambda must be >= 1");
    if (!(cfg.lambda_min_ratio > 0 && cfg.lambda_min_ratio <= 1))
        throw config_error("lambda_min_ratio must be in (0, 1]");
    if (cfg.n_folds < 2) throw config_error("n_folds must be >= 2");
    if (cfg.workers < 0) throw config_error("workers must be >= 0");
    if (cfg.workers == 0)
        cfg.workers = std::max(1u, std::thread::hardware_concurrency());
    if (cfg.deriv_order < 0) cfg.deriv_order = std::min(cfg.K, max_curve_deriv);
    if (cfg.deriv_order > max_curve_deriv)
        throw config_error("deriv_order exceeds the smoother's 2q-2 limit");
    if (cfg.resample < 0) throw config_error("resample must be >= 0");
    if (!(cfg.train_end > 0)) throw config_error("train_end must be > 0");
    if (!(cfg.predict_dt > 0)) throw config_error("predict_dt must be > 0");
    if (cfg.n_validation < 2) throw config_error("n_validation must be >= 2");
    if (!(cfg.alpha > 0 && cfg.alpha < 1)) throw config_error("alpha must be in (0,1)");
    if (cfg.outdir.empty()) throw config_error("outdir must not be empty");
    return cfg;
}

OdeSystem make_system(const ExperimentConfig& cfg) {
    if (cfg.system == "pendulum") return pendulum_system();
    if (cfg.system == "ddm") return ddm_system(cfg.tau1, cfg.tau2);
    throw config_error("system '" + cfg.system + "' cannot be simulated");
}

BasisLibrary make_library(const ExperimentConfig& cfg, int p) {
    return poly_trig_library(p, cfg.basis_degree, cfg.basis_trig == 1, cfg.basis_time);
}

ReplicateResult run_replicate(const ExperimentConfig& raw, int replicate) {
    const ExperimentConfig cfg = resolve(raw);
    ReplicateResult res;
    res.replicate = replicate;
    const double nan = std::numeric_limits<double>::quiet_NaN();
    res.rer_sem = res.rer_sindy = res.ma_sem = res.ma_sindy = nan;

    const ReplicateData data = make_observations(cfg, replicate);
    const int p = static_cast<int>(data.obs.values.rows());
    const int n_obs = data.obs.grid.size();
    const SmoothedSet curves = smooth_observations(data.obs, cfg.q);
    const QuadratureRule rule = make_rule(cfg, data.obs.grid.horizon, n_obs);
    const BasisLibrary lib = make_library(cfg, p);

    FitOptions fo;
    fo.n_lambda = cfg.n_lambda;
    fo.lambda_min_ratio = cfg.lambda_min_ratio;
    fo.n_folds = cfg.n_folds;
    fo.workers = cfg.workers;

    if (cfg.method != "sindy")
        res.sem = fit_equations(curves, lib, cfg.K, cfg.match_k, rule, fo);
    if (cfg.method != "sem")
        res.sindy = fit_equations(curves, lib, cfg.K, 0, rule, fo);

    if (data.truth) {
        const OdeSystem& sys = *data.truth;
        const Eigen::MatrixXd& states = data.traj->values;
        const Eigen::VectorXd& times = data.traj->grid.times;
        std::optional<Eigen::MatrixXi> truth_adj;
        if (sys.true_theta && sys.true_theta->cols() == cfg.K - 1 + lib.size())
            truth_adj = adjacency_from_theta(*sys.true_theta, lib, cfg.K);
        if (!res.sem.empty()) {
            res.rer_sem = rer(res.sem, sys, lib, states, times);
            if (truth_adj)
                res.ma_sem =
                    matching_accuracy(adjacency_from_solutions(res.sem, lib, p), *truth_adj);
        }
        if (!res.sindy.empty()) {
            res.rer_sindy = rer(res.sindy, sys, lib, states, times);
            if (truth_adj)
                res.ma_sindy =
                    matching_accuracy(adjacency_from_solutions(res.sindy, lib, p), *truth_adj);
        }
    }
    return res;
}

int cmd_simulate(const ExperimentConfig& raw) {
    const ExperimentConfig cfg = resolve(raw);
    if (cfg.system == "external")
        throw config_error("external data is observed, not simulated");
    fs::create_directories(cfg.outdir);
    Manifest manifest(cfg.outdir, "simulate", cfg);
    for (int r = 1; r <= cfg.replicates; ++r) {
        const ReplicateData data = make_observations(cfg, r);
        const fs::path dir = fs::path(cfg.outdir) / rep_name(r);
        fs::create_directories(dir);
        const fs::path traj_path = dir / "trajectory.csv";
        const fs::path obs_path = dir / "observations.csv";
        write_time_series(traj_path.string(), data.traj->grid.times, data.traj->values);
        write_time_series(obs_path.string(), data.obs.grid.times, data.obs.values);
        manifest.add(traj_path);
        manifest.add(obs_path);
    }
    manifest.write();
    return 0;
}

int cmd_smooth(const ExperimentConfig& raw) {
    const ExperimentConfig cfg = resolve(raw);
    fs::create_directories(cfg.outdir);
    Manifest manifest(cfg.outdir, "smooth", cfg);
    for (int r = 1; r <= cfg.replicates; ++r) {
        const ReplicateData data = make_observations(cfg, r);
        const SmoothedSet curves = smooth_observations(data.obs, cfg.q);
        const int n_obs = data.obs.grid.size();
        const int m = cfg.resample > 0 ? cfg.resample : 4 * n_obs;
        Eigen::VectorXd times;
        times.setLinSpaced(m, 0.0, data.obs.grid.horizon);

        const fs::path dir = fs::path(cfg.outdir) / rep_name(r);
        fs::create_directories(dir);
        for (int ord = 0; ord <= cfg.deriv_order; ++ord) {
            const fs::path path =
                dir / (ord == 0 ? std::string("smooth.csv")
                                : "smooth_d" + std::to_string(ord) + ".csv");
            write_time_series(path.string(), times, curves.resample(times, ord));
            manifest.add(path);
        }
        nlohmann::json sel;
        sel["channels"] = nlohmann::json::array();
        for (int i = 0; i < curves.channels(); ++i) {
            const SmoothedCurve& c = curves.curves[i];
            sel["channels"].push_back({{"channel", i + 1},
                                       {"nu", c.nu},
                                       {"edf", c.edf},
                                       {"gcv", c.gcv},
                                       {"rss", c.rss}});
        }
        const fs::path sel_path = dir / "smoothing.json";
        write_json_file(sel_path, sel);
        manifest.add(sel_path);
    }
    manifest.write();
    return 0;
}

namespace {

void append_metric(nlohmann::json& j, const std::string& key, double v) {
    if (std::isfinite(v)) j[key] = v;
}

void summarize(nlohmann::json& summary, const std::string& key, std::vector<double> xs) {
    xs.erase(std::remove_if(xs.begin(), xs.end(), [](double x) { return !std::isfinite(x); }),
             xs.end());
    if (xs.empty()) return;
    summary[key + "_mean"] = mean_of(xs);
    summary[key + "_se"] = se_of(xs);
}

}  // namespace

int cmd_discover(const ExperimentConfig& raw) {
    const ExperimentConfig cfg = resolve(raw);
    fs::create_directories(cfg.outdir);
    Manifest manifest(cfg.outdir, "discover", cfg);

    const int S = cfg.replicates;
    std::vector<ReplicateResult> results(S);
    ExperimentConfig rep_cfg = cfg;
    if (S > 1) rep_cfg.workers = 1;  // replicate-level parallelism outranks equation-level
    parallel_for(S, S > 1 ? cfg.workers : 1, [&](int idx) {
        try {
            results[idx] = run_replicate(rep_cfg, idx + 1);
        } catch (const std::exception& e) {
            throw numeric_error("replicate " + std::to_string(idx + 1) + ": " + e.what());
        }
    });

    const fs::path models = fs::path(cfg.outdir) / "models";
    std::optional<BasisLibrary> lib;
    for (const auto& res : results) {
        for (const std::string method : {"sem", "sindy"}) {
            const auto& fits = method == "sem" ? res.sem : res.sindy;
            if (fits.empty()) continue;
            if (!lib) lib = make_library(cfg, static_cast<int>(fits.size()));
            const fs::path dir = models / method / rep_name(res.replicate);
            fs::create_directories(dir);
            for (size_t i = 0; i < fits.size(); ++i) {
                const fs::path path = dir / eq_name(static_cast<int>(i) + 1);
                write_json_file(path, solution_to_json(fits[i]));
                manifest.add(path);
            }
        }
    }
    if (lib) {
        for (const std::string method : {"sem", "sindy"}) {
            if ((method == "sem" && cfg.method == "sindy") ||
                (method == "sindy" && cfg.method == "sem"))
                continue;
            const fs::path path = models / method / "library.json";
            write_json_file(path, library_to_json(*lib));
            manifest.add(path);
        }
    }

    nlohmann::json metrics;
    metrics["command"] = "discover";
    metrics["config"] = config_echo(cfg);
    metrics["replicates"] = nlohmann::json::array();
    std::vector<double> rer_sem, rer_sindy, ma_sem, ma_sindy;
    for (const auto& res : results) {
        nlohmann::json row;
        row["replicate"] = res.replicate;
        append_metric(row, "rer_sem", res.rer_sem);
        append_metric(row, "rer_sindy", res.rer_sindy);
        append_metric(row, "ma_sem", res.ma_sem);
        append_metric(row, "ma_sindy", res.ma_sindy);
        metrics["replicates"].push_back(row);
        rer_sem.push_back(res.rer_sem);
        rer_sindy.push_back(res.rer_sindy);
        ma_sem.push_back(res.ma_sem);
        ma_sindy.push_back(res.ma_sindy);
    }
    nlohmann::json summary;
    summary["replicates"] = S;
    summarize(summary, "rer_sem", rer_sem);
    summarize(summary, "rer_sindy", rer_sindy);
    summarize(summary, "ma_sem", ma_sem);
    summarize(summary, "ma_sindy", ma_sindy);
    metrics["summary"] = summary;

    const fs::path metrics_path = fs::path(cfg.outdir) / "metrics.json";
    write_json_file(metrics_path, metrics);
    manifest.add(metrics_path);
    manifest.write();
    return 0;
}

int cmd_predict(const ExperimentConfig& raw) {
    const ExperimentConfig cfg = resolve(raw);
    fs::create_directories(cfg.outdir);
    Manifest manifest(cfg.outdir, "predict", cfg);

    nlohmann::json metrics;
    metrics["command"] = "predict";
    metrics["config"] = config_echo(cfg);
    metrics["replicates"] = nlohmann::json::array();
    std::vector<double> rpe_sem, rpe_sindy;
    int wins_sem = 0, scored = 0;

    for (int r = 1; r <= cfg.replicates; ++r) {
        const ReplicateData data = make_observations(cfg, r);
        const double horizon = data.obs.grid.horizon;
        const double dt = cfg.predict_dt;
        if (!(cfg.train_end < horizon))
            throw config_error("train_end must lie inside the observation window");
        if (cfg.train_end + dt > horizon)
            throw config_error("prediction step leaves the observation window");

        // train-window observations only
        int n_train = 0;
        while (n_train < data.obs.grid.size() && data.obs.grid.times[n_train] < cfg.train_end)
            ++n_train;
        if (n_train < 2 * cfg.q)
            throw config_error("too few observations before train_end");
        NoisyObservations train;
        train.grid = make_grid(data.obs.grid.times.head(n_train).eval(), cfg.train_end);
        train.values = data.obs.values.leftCols(n_train);
        train.sigma = data.obs.sigma;
        train.gamma = data.obs.gamma;
        train.seed = data.obs.seed;

        const int p = static_cast<int>(data.obs.values.rows());
        const BasisLibrary lib = make_library(cfg, p);
        const SmoothedSet curves_train = smooth_observations(train, cfg.q);
        const SmoothedSet curves_full = smooth_observations(data.obs, cfg.q);
        const QuadratureRule rule = make_rule(cfg, cfg.train_end, n_train);

        FitOptions fo;
        fo.n_lambda = cfg.n_lambda;
        fo.lambda_min_ratio = cfg.lambda_min_ratio;
        fo.n_folds = cfg.n_folds;
        fo.workers = cfg.workers;

        Eigen::VectorXd val_times;
        val_times.setLinSpaced(cfg.n_validation, cfg.train_end, horizon - dt);
        Eigen::VectorXd pred_times = val_times.array() + dt;
        Eigen::MatrixXd reference = curves_full.resample(pred_times, 0);
        std::vector<Eigen::MatrixXd> state(cfg.K);
        for (int ord = 0; ord < cfg.K; ++ord) state[ord] = curves_full.resample(val_times, ord);

        nlohmann::json row;
        row["replicate"] = r;
        for (const std::string method : {"sem", "sindy"}) {
            if ((method == "sem" && cfg.method == "sindy") ||
                (method == "sindy" && cfg.method == "sem"))
                continue;
            const int k = method == "sem" ? cfg.match_k : 0;
            const auto fits = fit_equations(curves_train, lib, cfg.K, k, rule, fo);
            const OdeSystem model = discovered_system(fits, lib, cfg.K, horizon);

            Eigen::MatrixXd pred(p, cfg.n_validation);
            std::vector<int> kept;
            int flagged = 0;
            for (int j = 0; j < cfg.n_validation; ++j) {
                Eigen::VectorXd z(p * cfg.K);
                for (int ord = 0; ord < cfg.K; ++ord) z.segment(ord * p, p) = state[ord].col(j);
                const auto next = predict_forward(model, z, val_times[j], dt);
                if (next) {
                    pred.col(j) = next->head(p);
                    kept.push_back(j);
                } else {
                    pred.col(j).setConstant(std::numeric_limits<double>::quiet_NaN());
                    ++flagged;
                }
            }
            double value = std::numeric_limits<double>::quiet_NaN();
            if (!kept.empty()) {
                Eigen::MatrixXd pk(p, kept.size()), rk(p, kept.size());
                for (size_t c = 0; c < kept.size(); ++c) {
                    pk.col(c) = pred.col(kept[c]);
                    rk.col(c) = reference.col(kept[c]);
                }
                value = rpe(pk, rk);
            }
            row["rpe_" + method] = value;
            row["flagged_" + method] = flagged;
            (method == "sem" ? rpe_sem : rpe_sindy).push_back(value);

            Eigen::MatrixXd table(2 * p, cfg.n_validation);
            table.topRows(p) = pred;
            table.bottomRows(p) = reference;
            std::vector<std::string> labels;
            for (int i = 1; i <= p; ++i) labels.push_back("pred_x" + std::to_string(i));
            for (int i = 1; i <= p; ++i) labels.push_back("ref_x" + std::to_string(i));
            const fs::path dir = fs::path(cfg.outdir) / rep_name(r);
            fs::create_directories(dir);
            const fs::path path = dir / ("predictions_" + method + ".csv");
            write_time_series(path.string(), pred_times, table, labels);
            manifest.add(path);
        }
        if (cfg.method == "both" && std::isfinite(row["rpe_sem"].get<double>()) &&
            std::isfinite(row["rpe_sindy"].get<double>())) {
            ++scored;
            if (row["rpe_sem"].get<double>() < row["rpe_sindy"].get<double>()) ++wins_sem;
        }
        metrics["replicates"].push_back(row);
    }

    nlohmann::json summary;
    summary["replicates"] = cfg.replicates;
    summarize(summary, "rpe_sem", rpe_sem);
    summarize(summary, "rpe_sindy", rpe_sindy);
    if (cfg.method == "both") {
        summary["wins_sem"] = wins_sem;
        summary["scored"] = scored;
    }
    metrics["summary"] = summary;
    const fs::path metrics_path = fs::path(cfg.outdir) / "metrics.json";
    write_json_file(metrics_path, metrics);
    manifest.add(metrics_path);
    manifest.write();
    return 0;
}

namespace {

std::vector<fs::path> subject_dirs(const fs::path& root) {
    std::vector<fs::path> dirs;
    for (const auto& entry : fs::directory_iterator(root)) {
        if (!entry.is_directory()) continue;
        for (const auto& f : fs::directory_iterator(entry.path())) {
            const std::string name = f.path().filename().string();
            if (name.rfind("eq", 0) == 0 && f.path().extension() == ".json") {
                dirs.push_back(entry.path());
                break;
            }
        }
    }
    std::sort(dirs.begin(), dirs.end());
    return dirs;
}

std::vector<SparseSolution> read_subject(const fs::path& dir) {
    std::vector<fs::path> files;
    for (const auto& f : fs::directory_iterator(dir)) {
        const std::string name = f.path().filename().string();
        if (name.rfind("eq", 0) == 0 && f.path().extension() == ".json")
            files.push_back(f.path());
    }
    std::sort(files.begin(), files.end());
    std::vector<SparseSolution> fits;
    for (const auto& path : files) {
        std::ifstream in(path);
        if (!in) throw config_error("cannot read " + path.string());
        nlohmann::json j;
        in >> j;
        fits.push_back(solution_from_json(j));
    }
    return fits;
}

BasisLibrary read_library(const fs::path& dir) {
    const fs::path path = dir / "library.json";
    if (!fs::exists(path))
        throw config_error("missing " + path.string());
    std::ifstream in(path);
    nlohmann::json j;
    in >> j;
    return library_from_json(j);
}

std::vector<Eigen::MatrixXi> subject_adjacencies(const fs::path& root, const BasisLibrary& lib,
                                                 int& p_out) {
    std::vector<Eigen::MatrixXi> adj;
    for (const auto& dir : subject_dirs(root)) {
        const auto fits = read_subject(dir);
        const int p = static_cast<int>(fits.size());
        if (p_out == 0) p_out = p;
        if (p != p_out)
            throw config_error(dir.string() + ": equation count differs across subjects");
        adj.push_back(adjacency_from_solutions(fits, lib, p));
    }
    return adj;
}

}  // namespace

int cmd_infer(const ExperimentConfig& raw) {
    const ExperimentConfig cfg = resolve(raw);
    if (cfg.model_dir.empty()) throw config_error("infer needs model_dir");
    if (!fs::is_directory(cfg.model_dir))
        throw config_error("model_dir not found: " + cfg.model_dir);
    const BasisLibrary lib = read_library(cfg.model_dir);

    int p = 0;
    const std::vector<Eigen::MatrixXi> task = subject_adjacencies(cfg.model_dir, lib, p);
    if (task.size() < 2) throw config_error("infer needs at least 2 subjects");
    std::vector<Eigen::MatrixXi> baseline;
    if (!cfg.baseline_dir.empty()) {
        if (!fs::is_directory(cfg.baseline_dir))
            throw config_error("baseline_dir not found: " + cfg.baseline_dir);
        const BasisLibrary base_lib = fs::exists(fs::path(cfg.baseline_dir) / "library.json")
                                          ? read_library(cfg.baseline_dir)
                                          : lib;
        baseline = subject_adjacencies(cfg.baseline_dir, base_lib, p);
    }

    const NetworkInference inf = infer_network(task, baseline, cfg.alpha);

    fs::create_directories(cfg.outdir);
    Manifest manifest(cfg.outdir, "infer", cfg);
    const fs::path net_path = fs::path(cfg.outdir) / "network.json";
    write_json_file(net_path, inference_to_json(inf));
    manifest.add(net_path);
    const fs::path edges_path = fs::path(cfg.outdir) / "edges.csv";
    write_edge_csv(edges_path.string(), inf);
    manifest.add(edges_path);
    const fs::path cent_path = fs::path(cfg.outdir) / "centrality.csv";
    write_centrality_csv(cent_path.string(), inf.network_centralities);
    manifest.add(cent_path);
    manifest.write();
    return 0;
}

int cmd_report(const ExperimentConfig& raw) {
    const ExperimentConfig cfg = resolve(raw);
    if (cfg.metrics_dir.empty()) throw config_error("report needs metrics_dir");
    if (!fs::is_directory(cfg.metrics_dir))
        throw config_error("metrics_dir not found: " + cfg.metrics_dir);

    std::vector<fs::path> files;
    for (const auto& entry : fs::recursive_directory_iterator(cfg.metrics_dir))
        if (entry.is_regular_file() && entry.path().filename() == "metrics.json")
            files.push_back(entry.path());
    std::sort(files.begin(), files.end());
    if (files.empty()) throw config_error("no metrics.json found under " + cfg.metrics_dir);

    struct Cell {
        int n = 0;
        double gamma = 0.0;
        std::string method;
        int replicates = 0;
        double rer_mean = 0, rer_se = 0, ma_mean = 0, ma_se = 0;
        bool has_rer = false, has_ma = false;
    };
    std::vector<Cell> cells;
    for (const auto& path : files) {
        std::ifstream in(path);
        if (!in) throw config_error("cannot read " + path.string());
        nlohmann::json j;
        try {
            in >> j;
        } catch (const nlohmann::json::exception& e) {
            throw config_error(path.string() + ": " + e.what());
        }
        if (!j.contains("summary") || !j.contains("config")) continue;
        const auto& summary = j["summary"];
        const auto& jc = j["config"];
        for (const std::string method : {"sem", "sindy"}) {
            Cell c;
            c.n = jc.value("n", 0);
            c.gamma = jc.value("gamma", 0.0);
            c.method = method;
            c.replicates = summary.value("replicates", 0);
            if (summary.contains("rer_" + method + "_mean")) {
                c.has_rer = true;
                c.rer_mean = summary["rer_" + method + "_mean"].get<double>();
                c.rer_se = summary.value("rer_" + method + "_se", 0.0);
            }
            if (summary.contains("ma_" + method + "_mean")) {
                c.has_ma = true;
                c.ma_mean = summary["ma_" + method + "_mean"].get<double>();
                c.ma_se = summary.value("ma_" + method + "_se", 0.0);
            }
            if (c.has_rer || c.has_ma) cells.push_back(c);
        }
    }
    std::sort(cells.begin(), cells.end(), [](const Cell& a, const Cell& b) {
        return std::tie(a.n, a.gamma, a.method) < std::tie(b.n, b.gamma, b.method);
    });

    fs::create_directories(cfg.outdir);
    Manifest manifest(cfg.outdir, "report", cfg);
    nlohmann::json table = nlohmann::json::array();
    for (const auto& c : cells) {
        nlohmann::json row;
        row["n"] = c.n;
        row["gamma"] = c.gamma;
        row["method"] = c.method;
        row["replicates"] = c.replicates;
        if (c.has_rer) {
            row["rer_mean"] = c.rer_mean;
            row["rer_se"] = c.rer_se;
        }
        if (c.has_ma) {
            row["ma_mean"] = c.ma_mean;
            row["ma_se"] = c.ma_se;
        }
        table.push_back(row);
    }
    nlohmann::json report;
    report["command"] = "report";
    report["cells"] = table;
    const fs::path report_path = fs::path(cfg.outdir) / "report.json";
    write_json_file(report_path, report);
    manifest.add(report_path);

    const fs::path csv_path = fs::path(cfg.outdir) / "report.csv";
    {
        std::ofstream out(csv_path);
        if (!out) throw std::runtime_error("cannot open " + csv_path.string() + " for writing");
        out << "n,gamma,method,replicates,rer_mean,rer_se,ma_mean,ma_se\n";
        for (const auto& c : cells) {
            out << c.n << ',' << format_double(c.gamma) << ',' << c.method << ','
                << c.replicates << ',';
            if (c.has_rer) out << format_double(c.rer_mean) << ',' << format_double(c.rer_se);
            else out << ',';
            out << ',';
            if (c.has_ma) out << format_double(c.ma_mean) << ',' << format_double(c.ma_se);
            else out << ',';
            out << '\n';
        }
    }
    manifest.add(csv_path);
    manifest.write();
    return 0;
}

}  // namespace sem
