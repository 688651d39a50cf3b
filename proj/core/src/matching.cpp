#include "sem/matching.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <limits>
#include <map>

#include "sem/errors.hpp"
#include "sem/parallel.hpp"

namespace sem {

std::vector<int> SparseSolution::support() const {
    std::vector<int> s;
    for (int d = 0; d < theta.size(); ++d)
        if (theta[d] != 0.0) s.push_back(d);
    return s;
}

nlohmann::json solution_to_json(const SparseSolution& s) {
    nlohmann::json j;
    j["equation_index"] = s.equation;
    j["K"] = s.K;
    j["k"] = s.k;
    j["lambda"] = s.lambda;
    std::vector<double> om(s.K - 1);
    for (int l = 0; l < s.K - 1; ++l) om[l] = -s.theta[l];
    j["omega"] = om;
    nlohmann::json beta = nlohmann::json::array();
    for (int d = s.K - 1; d < s.theta.size(); ++d)
        beta.push_back({{"label", s.labels.at(d)}, {"value", s.theta[d]}});
    j["beta"] = beta;
    j["alpha"] = std::vector<double>(s.alpha.data(), s.alpha.data() + s.alpha.size());
    j["objective"] = s.objective;
    return j;
}

SparseSolution solution_from_json(const nlohmann::json& j) {
    SparseSolution s;
    s.equation = j.at("equation_index").get<int>();
    s.K = j.at("K").get<int>();
    s.k = j.at("k").get<int>();
    s.lambda = j.at("lambda").get<double>();
    const auto om = j.at("omega").get<std::vector<double>>();
    const auto& beta = j.at("beta");
    if (static_cast<int>(om.size()) != s.K - 1)
        throw config_error("model file: omega length does not match K");
    s.theta.resize(s.K - 1 + static_cast<int>(beta.size()));
    s.labels.clear();
    for (int l = 0; l < s.K - 1; ++l) {
        s.theta[l] = -om[l];
        s.labels.push_back("omega" + std::to_string(l + 1));
    }
    int d = s.K - 1;
    for (const auto& entry : beta) {
        s.theta[d++] = entry.at("value").get<double>();
        s.labels.push_back(entry.at("label").get<std::string>());
    }
    const auto al = j.at("alpha").get<std::vector<double>>();
    s.alpha = Eigen::Map<const Eigen::VectorXd>(al.data(), al.size());
    s.objective = j.at("objective").get<double>();
    return s;
}

namespace {

constexpr double kSnapTol = 1e-12;

void check_problem(const MatchingProblem& prob) {
    const int n = prob.rule.size();
    if (prob.response.size() != n || prob.theta_block.rows() != n ||
        prob.alpha_block.rows() != n)
        throw std::invalid_argument("matching problem blocks disagree on node count");
    if (prob.theta_block.cols() != static_cast<int>(prob.column_labels.size()))
        throw std::invalid_argument("matching problem labels disagree with theta columns");
}

// weighted problem pre-multiplied by sqrt(w), with theta columns standardized
// to unit weighted norm; Gram matrices back the coordinate updates
struct PathProblem {
    Eigen::VectorXd scales;   // original column norms (1 for zero columns)
    Eigen::MatrixXd Zs;       // sqrt(w)-scaled standardized theta block
    Eigen::MatrixXd Phis;     // sqrt(w)-scaled alpha block
    Eigen::VectorXd ys;
    Eigen::MatrixXd S, F, A, Apinv;
    Eigen::VectorXd u, b;
    bool alpha_rank_deficient = false;
};

PathProblem prepare_path(const MatchingProblem& prob, const Eigen::VectorXd& weights,
                         const std::optional<Eigen::VectorXd>& pinned_scales) {
    const int n = prob.rule.size();
    const int D = static_cast<int>(prob.theta_block.cols());
    const int ka = static_cast<int>(prob.alpha_block.cols());
    const Eigen::VectorXd sw = weights.cwiseMax(0.0).cwiseSqrt();

    PathProblem pp;
    pp.Zs = sw.asDiagonal() * prob.theta_block;
    pp.Phis = sw.asDiagonal() * prob.alpha_block;
    pp.ys = sw.cwiseProduct(prob.response);

    pp.A.noalias() = pp.Phis.transpose() * pp.Phis;
    pp.b.noalias() = pp.Phis.transpose() * pp.ys;
    if (ka > 0) {
        Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(pp.A);
        pp.alpha_rank_deficient = cod.rank() < ka;
        pp.Apinv = cod.pseudoInverse();
    } else {
        pp.Apinv.resize(0, 0);
    }

    if (pinned_scales) {
        if (pinned_scales->size() != D)
            throw std::invalid_argument("pinned scales disagree with theta columns");
        pp.scales = *pinned_scales;
    } else {
        // norms are taken net of the alpha span: the unpenalized alpha block
        // absorbs that component of every column, so only the remainder should
        // carry penalty weight (this also keeps the weights unchanged under
        // kernel perturbations, which move columns inside the alpha span only)
        pp.scales.resize(D);
        for (int d = 0; d < D; ++d) {
            const double raw2 = pp.Zs.col(d).squaredNorm();
            double res2 = raw2;
            if (ka > 0) {
                const Eigen::VectorXd g = pp.Phis.transpose() * pp.Zs.col(d);
                res2 -= g.dot(pp.Apinv * g);
            }
            res2 = std::max(res2, 0.0);
            if (res2 > raw2 * 1e-24)
                pp.scales[d] = std::sqrt(res2);
            else
                pp.scales[d] = raw2 > 0 ? std::sqrt(raw2) : 1.0;
        }
    }
    for (int d = 0; d < D; ++d) pp.Zs.col(d) /= pp.scales[d];

    pp.S.noalias() = pp.Zs.transpose() * pp.Zs;
    pp.u.noalias() = pp.Zs.transpose() * pp.ys;
    pp.F.noalias() = pp.Zs.transpose() * pp.Phis;
    (void)n;
    return pp;
}

// cyclic coordinate descent at one lambda; theta_std is warm-started in place.
// A mask restricts updates to the flagged coordinates (others stay frozen).
void cd_solve(const PathProblem& pp, double lambda, Eigen::VectorXd& theta_std,
              Eigen::VectorXd& alpha, double tol, int max_sweeps,
              const std::vector<char>* mask = nullptr) {
    const int D = static_cast<int>(theta_std.size());
    const int ka = static_cast<int>(pp.b.size());
    Eigen::VectorXd s_theta = pp.S * theta_std;  // maintained = S * theta
    for (int sweep = 0; sweep < max_sweeps; ++sweep) {
        if (ka > 0)
            alpha.noalias() = pp.Apinv * (pp.b - pp.F.transpose() * theta_std);
        const Eigen::VectorXd f_alpha = ka > 0 ? (pp.F * alpha).eval() : Eigen::VectorXd::Zero(D);
        double max_change = 0.0;
        for (int d = 0; d < D; ++d) {
            if (mask && !(*mask)[d]) continue;
            const double sdd = pp.S(d, d);
            const double old = theta_std[d];
            double value = 0.0;
            if (sdd > 0) {
                const double corr = pp.u[d] - (s_theta[d] - sdd * old) - f_alpha[d];
                const double thr = 0.5 * lambda;
                if (corr > thr)
                    value = (corr - thr) / sdd;
                else if (corr < -thr)
                    value = (corr + thr) / sdd;
            }
            if (value != old) {
                s_theta += (value - old) * pp.S.col(d);
                theta_std[d] = value;
                max_change = std::max(max_change, std::abs(value - old));
            }
        }
        if (max_change < tol) break;
    }
    // degenerate near-collinear columns can end at the subgradient boundary
    // with relative dust; snap on the solution's own scale
    const double snap =
        std::max(kSnapTol, 1e-6 * theta_std.cwiseAbs().maxCoeff());
    for (int d = 0; d < D; ++d)
        if (std::abs(theta_std[d]) < snap) theta_std[d] = 0.0;
    if (ka > 0) alpha.noalias() = pp.Apinv * (pp.b - pp.F.transpose() * theta_std);
}

SparseSolution finalize(const MatchingProblem& prob, const PathProblem& pp, double lambda,
                        const Eigen::VectorXd& theta_std, const Eigen::VectorXd& alpha) {
    SparseSolution sol;
    sol.equation = prob.equation;
    sol.K = prob.K;
    sol.k = prob.k;
    sol.lambda = lambda;
    sol.labels = prob.column_labels;
    sol.scales = pp.scales;
    sol.theta = theta_std.cwiseQuotient(pp.scales);
    sol.alpha = alpha;
    Eigen::VectorXd r = prob.response - prob.theta_block * sol.theta;
    if (alpha.size() > 0) r -= prob.alpha_block * alpha;
    sol.objective = prob.rule.weights.dot(r.cwiseAbs2()) + lambda * theta_std.lpNorm<1>();
    return sol;
}

double lambda_max_for(const PathProblem& pp) {
    Eigen::VectorXd alpha0 =
        pp.b.size() > 0 ? (pp.Apinv * pp.b).eval() : Eigen::VectorXd();
    Eigen::VectorXd corr = pp.u;
    if (pp.b.size() > 0) corr -= pp.F * alpha0;
    return 2.0 * corr.cwiseAbs().maxCoeff();
}

// warm-started geometric descent from lambda_max to the target; direct cold
// solves stall short of stationarity on near-collinear columns at small lambda
void path_solve(const PathProblem& pp, double lambda, Eigen::VectorXd& theta_std,
                Eigen::VectorXd& alpha, const LassoOptions& opts) {
    const double top = lambda_max_for(pp);
    const double anchor = lambda > 0 ? lambda : top * 1e-8;
    if (top > 0 && anchor < top) {
        const int steps =
            std::clamp(static_cast<int>(std::ceil(8.0 * std::log10(top / anchor))), 1, 400);
        for (int s = 0; s < steps; ++s) {
            const double lam = top * std::pow(anchor / top, static_cast<double>(s) / steps);
            cd_solve(pp, lam, theta_std, alpha, opts.tol, opts.max_sweeps);
        }
    }
    cd_solve(pp, lambda, theta_std, alpha, opts.tol, opts.max_sweeps);
}

double penalized_objective(const PathProblem& pp, double lambda,
                           const Eigen::VectorXd& theta_std, const Eigen::VectorXd& alpha) {
    Eigen::VectorXd r = pp.ys - pp.Zs * theta_std;
    if (alpha.size() > 0) r -= pp.Phis * alpha;
    return r.squaredNorm() + lambda * theta_std.lpNorm<1>();
}

// near-collinear columns leave the optimum flat along a face of the L1 ball,
// and which tied point the path lands on is history. Prefer the sparsest:
// drop an active coordinate when re-optimizing the rest leaves the objective
// unchanged to numerical tolerance and every dropped coordinate stays inside
// the subgradient bound. Genuine terms cost far more than the slack to remove.
void sparsity_polish(const PathProblem& pp, double lambda, Eigen::VectorXd& theta_std,
                     Eigen::VectorXd& alpha, const LassoOptions& opts) {
    if (lambda <= 0) return;
    const int D = static_cast<int>(theta_std.size());
    double base = penalized_objective(pp, lambda, theta_std, alpha);
    const double slack = 1e-8 * std::max(base, 1e-30);
    bool retry = true;
    while (retry) {
        retry = false;
        std::vector<int> active;
        for (int d = 0; d < D; ++d)
            if (theta_std[d] != 0.0) active.push_back(d);
        std::sort(active.begin(), active.end(), [&](int a, int b) {
            return std::abs(theta_std[a]) < std::abs(theta_std[b]);
        });
        for (int d : active) {
            Eigen::VectorXd cand = theta_std;
            Eigen::VectorXd calpha = alpha;
            cand[d] = 0.0;
            std::vector<char> mask(D, 0);
            for (int e : active) mask[e] = e != d;
            // the legality test below reads gradients at the candidate, so the
            // restricted re-solve needs tighter stationarity than the path
            cd_solve(pp, lambda, cand, calpha, std::min(opts.tol, 1e-12), opts.max_sweeps, &mask);
            if (penalized_objective(pp, lambda, cand, calpha) > base + slack) continue;
            Eigen::VectorXd grad = 2.0 * (pp.u - pp.S * cand);
            if (calpha.size() > 0) grad.noalias() -= 2.0 * (pp.F * calpha);
            bool legal = true;
            for (int e = 0; e < D && legal; ++e)
                if (cand[e] == 0.0 && std::abs(grad[e]) > lambda * (1.0 + 5e-7)) legal = false;
            if (!legal) continue;
            theta_std = cand;
            alpha = calpha;
            retry = true;
            break;
        }
    }
}

}  // namespace

double lambda_max(const MatchingProblem& prob) {
    check_problem(prob);
    const PathProblem pp = prepare_path(prob, prob.rule.weights, std::nullopt);
    return lambda_max_for(pp);
}

std::vector<double> default_lambda_grid(const MatchingProblem& prob, int count,
                                        double min_ratio) {
    if (count < 1) throw std::invalid_argument("lambda grid needs at least one value");
    const double top = lambda_max(prob);
    std::vector<double> grid(count);
    if (count == 1) {
        grid[0] = top;
        return grid;
    }
    for (int g = 0; g < count; ++g)
        grid[g] = top * std::pow(min_ratio, static_cast<double>(g) / (count - 1));
    return grid;
}

SparseSolution lasso_solve(const MatchingProblem& prob, double lambda,
                           const LassoOptions& opts) {
    check_problem(prob);
    if (!(lambda >= 0)) throw std::invalid_argument("lambda must be nonnegative");
    const PathProblem pp = prepare_path(prob, prob.rule.weights, opts.scales);
    if (pp.alpha_rank_deficient)
        std::cerr << "warning: alpha block rank-deficient, using minimum-norm fit\n";
    Eigen::VectorXd theta_std = Eigen::VectorXd::Zero(prob.theta_block.cols());
    Eigen::VectorXd alpha = Eigen::VectorXd::Zero(prob.alpha_block.cols());
    path_solve(pp, lambda, theta_std, alpha, opts);
    sparsity_polish(pp, lambda, theta_std, alpha, opts);
    return finalize(prob, pp, lambda, theta_std, alpha);
}

CvResult cv_select_lambda(const MatchingProblem& prob, std::vector<double> lambda_grid,
                          int n_folds, const LassoOptions& opts) {
    check_problem(prob);
    const int n = prob.rule.size();
    if (n_folds < 2) throw config_error("cross-validation needs at least 2 folds");
    if (n < 2 * n_folds) throw config_error("cross-validation needs at least 2 nodes per fold");
    if (lambda_grid.empty()) lambda_grid = default_lambda_grid(prob);
    // descending so warm starts move from sparse to dense fits
    std::sort(lambda_grid.begin(), lambda_grid.end(), std::greater<double>());
    const int L = static_cast<int>(lambda_grid.size());

    const double lo = prob.rule.nodes[0];
    const double span = prob.rule.nodes[n - 1] - lo;
    std::vector<int> fold_of(n);
    std::vector<int> fold_count(n_folds, 0);
    for (int j = 0; j < n; ++j) {
        int f = static_cast<int>(std::floor((prob.rule.nodes[j] - lo) / span * n_folds));
        f = std::clamp(f, 0, n_folds - 1);
        fold_of[j] = f;
        ++fold_count[f];
    }
    for (int f = 0; f < n_folds; ++f)
        if (fold_count[f] == 0)
            throw config_error("cross-validation fold " + std::to_string(f) + " is empty");

    Eigen::MatrixXd fold_err = Eigen::MatrixXd::Zero(n_folds, L);
    for (int f = 0; f < n_folds; ++f) {
        Eigen::VectorXd w_train = prob.rule.weights;
        for (int j = 0; j < n; ++j)
            if (fold_of[j] == f) w_train[j] = 0.0;
        const PathProblem pp = prepare_path(prob, w_train, opts.scales);
        Eigen::VectorXd theta_std = Eigen::VectorXd::Zero(prob.theta_block.cols());
        Eigen::VectorXd alpha = Eigen::VectorXd::Zero(prob.alpha_block.cols());
        for (int g = 0; g < L; ++g) {
            cd_solve(pp, lambda_grid[g], theta_std, alpha, opts.tol, opts.max_sweeps);
            const Eigen::VectorXd theta = theta_std.cwiseQuotient(pp.scales);
            Eigen::VectorXd r = prob.response - prob.theta_block * theta;
            if (alpha.size() > 0) r -= prob.alpha_block * alpha;
            double err = 0.0;
            for (int j = 0; j < n; ++j)
                if (fold_of[j] == f) err += prob.rule.weights[j] * r[j] * r[j];
            fold_err(f, g) = err;
        }
    }

    CvResult out;
    out.lambda_grid = lambda_grid;
    out.cv_error.resize(L);
    out.cv_se.resize(L);
    int best = 0;
    for (int g = 0; g < L; ++g) {
        out.cv_error[g] = fold_err.col(g).mean();
        const double var =
            (fold_err.col(g).array() - out.cv_error[g]).square().sum() / (n_folds - 1);
        out.cv_se[g] = std::sqrt(var / n_folds);
        if (out.cv_error[g] < out.cv_error[best]) best = g;  // ties keep larger lambda
    }
    if (opts.cv_one_se) {
        // parsimony rule: the grid is descending, so the first lambda whose mean
        // error is statistically indistinguishable from the minimum is the
        // largest such lambda
        const double bound = out.cv_error[best] + out.cv_se[best];
        for (int g = 0; g < L; ++g)
            if (out.cv_error[g] <= bound) {
                best = g;
                break;
            }
    }
    out.lambda = lambda_grid[best];
    out.fit = lasso_solve(prob, out.lambda, opts);
    return out;
}

namespace {

const GreensKernel* find_kernel(const std::vector<GreensKernel>& kernels, int order) {
    for (const auto& kern : kernels)
        if (kern.order == order) return &kern;
    return nullptr;
}

// transform matrices cached per kernel order
struct TransformCache {
    const QuadratureRule& rule;
    const std::vector<GreensKernel>& kernels;
    std::map<int, Eigen::MatrixXd> mats;

    const Eigen::MatrixXd& matrix(int order) {
        auto it = mats.find(order);
        if (it != mats.end()) return it->second;
        const GreensKernel* k = find_kernel(kernels, order);
        Eigen::MatrixXd m = kernel_matrix(k ? *k : greens(order), rule, rule.nodes);
        return mats.emplace(order, std::move(m)).first->second;
    }
};

}  // namespace

MatchingProblem build_problem_from_samples(const Eigen::MatrixXd& values,
                                           const std::vector<Eigen::MatrixXd>& derivatives,
                                           const BasisLibrary& lib, int K, int k, int equation,
                                           const QuadratureRule& rule,
                                           const std::vector<GreensKernel>& kernels) {
    const int p = static_cast<int>(values.rows());
    const int n = rule.size();
    if (K < 1) throw std::invalid_argument("matching needs K >= 1");
    if (k < 0) throw std::invalid_argument("matching order k must be >= 0");
    if (equation < 0 || equation >= p) throw std::invalid_argument("equation index out of range");
    if (values.cols() != n) throw std::invalid_argument("values must be sampled on the rule nodes");
    if (lib.p != p) throw std::invalid_argument("library p does not match the sample channels");
    const int max_deriv = k < K ? K - k : 0;
    if (static_cast<int>(derivatives.size()) <= max_deriv && max_deriv > 0)
        throw std::invalid_argument("matching needs derivatives up to order " +
                                    std::to_string(max_deriv));
    for (int ord = 1; ord <= max_deriv; ++ord)
        if (derivatives[ord].rows() != p || derivatives[ord].cols() != n)
            throw std::invalid_argument("derivative matrices must be p x nodes");

    const int D = lib.size();
    TransformCache cache{rule, kernels, {}};

    MatchingProblem prob;
    prob.equation = equation;
    prob.K = K;
    prob.k = k;
    prob.rule = rule;
    prob.xi_samples = values.row(equation).transpose();
    prob.basis_samples = evaluate_all(lib, values, rule.nodes);

    if (k <= K) {
        prob.response = (K - k == 0) ? prob.xi_samples
                                     : derivatives[K - k].row(equation).transpose();
    } else {
        prob.response = cache.matrix(k - K) * prob.xi_samples;
    }

    prob.theta_block.resize(n, K - 1 + D);
    prob.column_labels.clear();
    for (int l = 1; l <= K - 1; ++l) {
        if (l >= k + 1)
            prob.theta_block.col(l - 1) = derivatives[l - k].row(equation).transpose();
        else if (k - l == 0)
            prob.theta_block.col(l - 1) = prob.xi_samples;
        else
            prob.theta_block.col(l - 1) = cache.matrix(k - l) * prob.xi_samples;
        prob.column_labels.push_back("omega" + std::to_string(l));
    }
    if (k == 0)
        prob.theta_block.rightCols(D) = prob.basis_samples;
    else
        prob.theta_block.rightCols(D) = cache.matrix(k) * prob.basis_samples;
    for (int d = 0; d < D; ++d) prob.column_labels.push_back(lib.features[d].label);

    prob.alpha_block = null_basis(k, rule.nodes);
    return prob;
}

MatchingProblem build_problem(const SmoothedSet& curves, const BasisLibrary& lib, int K, int k,
                              int equation, const QuadratureRule& rule) {
    const int p = curves.channels();
    if (p < 1) throw std::invalid_argument("matching needs at least one curve");
    std::vector<Eigen::MatrixXd> derivs;
    derivs.push_back(curves.resample(rule.nodes, 0));
    const int max_deriv = k < K ? K - k : 0;
    for (int ord = 1; ord <= max_deriv; ++ord) derivs.push_back(curves.resample(rule.nodes, ord));
    return build_problem_from_samples(derivs[0], derivs, lib, K, k, equation, rule);
}

QuadratureRule default_quadrature(double horizon, int n_observations) {
    // nodes at the observation times: between them the smoother only
    // interpolates, and its interpolation wiggle would leak into the residual
    return trapezoid_rule(make_grid(n_observations, horizon));
}

std::vector<SparseSolution> fit_equations(const SmoothedSet& curves, const BasisLibrary& lib,
                                          int K, int k, const QuadratureRule& rule,
                                          const FitOptions& opts) {
    const int p = curves.channels();
    std::vector<Eigen::MatrixXd> derivs;
    derivs.push_back(curves.resample(rule.nodes, 0));
    const int max_deriv = k < K ? K - k : 0;
    for (int ord = 1; ord <= max_deriv; ++ord) derivs.push_back(curves.resample(rule.nodes, ord));

    // problems share every kernel transform; assemble them once
    std::vector<MatchingProblem> problems(p);
    {
        TransformCache cache{rule, {}, {}};
        const Eigen::MatrixXd H = evaluate_all(lib, derivs[0], rule.nodes);
        const Eigen::MatrixXd driving = k == 0 ? H : cache.matrix(k) * H;
        std::map<int, Eigen::MatrixXd> value_transforms;  // order -> (nodes x p)
        for (int l = 1; l <= K - 1; ++l)
            if (l <= k && k - l > 0 && !value_transforms.count(k - l))
                value_transforms.emplace(k - l, cache.matrix(k - l) * derivs[0].transpose());
        if (k > K && !value_transforms.count(k - K))
            value_transforms.emplace(k - K, cache.matrix(k - K) * derivs[0].transpose());

        const int D = lib.size();
        const Eigen::MatrixXd alpha_block = null_basis(k, rule.nodes);
        for (int i = 0; i < p; ++i) {
            MatchingProblem& prob = problems[i];
            prob.equation = i;
            prob.K = K;
            prob.k = k;
            prob.rule = rule;
            prob.xi_samples = derivs[0].row(i).transpose();
            prob.basis_samples = H;
            if (k <= K)
                prob.response = (K - k == 0) ? prob.xi_samples
                                             : derivs[K - k].row(i).transpose();
            else
                prob.response = value_transforms.at(k - K).col(i);
            prob.theta_block.resize(rule.size(), K - 1 + D);
            for (int l = 1; l <= K - 1; ++l) {
                if (l >= k + 1)
                    prob.theta_block.col(l - 1) = derivs[l - k].row(i).transpose();
                else if (k - l == 0)
                    prob.theta_block.col(l - 1) = prob.xi_samples;
                else
                    prob.theta_block.col(l - 1) = value_transforms.at(k - l).col(i);
                prob.column_labels.push_back("omega" + std::to_string(l));
            }
            prob.theta_block.rightCols(D) = driving;
            for (int d = 0; d < D; ++d) prob.column_labels.push_back(lib.features[d].label);
            prob.alpha_block = alpha_block;
        }
    }

    std::vector<SparseSolution> fits(p);
    parallel_for(p, opts.workers, [&](int i) {
        std::vector<double> grid =
            default_lambda_grid(problems[i], opts.n_lambda, opts.lambda_min_ratio);
        fits[i] = cv_select_lambda(problems[i], std::move(grid), opts.n_folds, opts.lasso).fit;
    });
    return fits;
}

std::vector<SparseSolution> fit_sem(const SmoothedSet& curves, const BasisLibrary& lib, int K,
                                    const QuadratureRule& rule, const FitOptions& opts) {
    return fit_equations(curves, lib, K, K, rule, opts);
}

std::vector<SparseSolution> fit_sindy(const SmoothedSet& curves, const BasisLibrary& lib, int K,
                                      const QuadratureRule& rule, const FitOptions& opts) {
    return fit_equations(curves, lib, K, 0, rule, opts);
}

InvarianceReport invariance_check(const MatchingProblem& prob,
                                  const std::vector<Eigen::MatrixXd>& v, double lambda,
                                  const LassoOptions& opts) {
    check_problem(prob);
    const int K = prob.K;
    const int n = prob.rule.size();
    const int D = static_cast<int>(prob.basis_samples.cols());
    if (prob.k != K || K < 1)
        throw std::invalid_argument("invariance check applies to the derivative-free problem (k = K)");
    if (static_cast<int>(v.size()) != K)
        throw std::invalid_argument("invariance check needs perturbations v_1..v_K");
    for (int m = 1; m <= K; ++m)
        if (v[m - 1].rows() != m || v[m - 1].cols() != n)
            throw std::invalid_argument("v_" + std::to_string(m) + " must be " +
                                        std::to_string(m) + " x nodes");

    const Eigen::VectorXd& w = prob.rule.weights;
    // weighted moments: I_m = int v_m X_i ds (m-vector), J = int v_K H^T ds (K x D)
    std::vector<Eigen::VectorXd> integ(K + 1);
    for (int m = 1; m <= K; ++m) integ[m] = v[m - 1] * w.cwiseProduct(prob.xi_samples);
    const Eigen::MatrixXd J = v[K - 1] * (w.asDiagonal() * prob.basis_samples);

    MatchingProblem pert = prob;
    for (int l = 1; l <= K - 1; ++l) {
        const int m = K - l;  // kernel order backing the omega-l column
        pert.theta_block.col(l - 1) += null_basis(m, prob.rule.nodes) * integ[m];
    }
    pert.theta_block.rightCols(D) += null_basis(K, prob.rule.nodes) * J;

    // identical penalties: pin the perturbed solve to the canonical scales
    LassoOptions pinned = opts;
    SparseSolution canonical = lasso_solve(prob, lambda, pinned);
    pinned.scales = canonical.scales;
    SparseSolution perturbed = lasso_solve(pert, lambda, pinned);

    InvarianceReport rep;
    rep.theta_gap = (canonical.theta - perturbed.theta).cwiseAbs().maxCoeff();

    // invert the alpha map: alpha_k = alpha~_k - sum_{m=k}^{K-1} omega~_{K-m} I_{m,k}
    //                                 + (J beta~)_k
    const Eigen::VectorXd jb = J * perturbed.beta();
    Eigen::VectorXd recovered = perturbed.alpha;
    for (int k0 = 1; k0 <= K; ++k0) {
        for (int m = k0; m <= K - 1; ++m) {
            const double omega_tilde = -perturbed.theta[K - m - 1];
            recovered[k0 - 1] -= omega_tilde * integ[m][k0 - 1];
        }
        recovered[k0 - 1] += jb[k0 - 1];
    }
    rep.alpha_residual = (recovered - canonical.alpha).cwiseAbs().maxCoeff();
    rep.canonical = std::move(canonical);
    rep.perturbed = std::move(perturbed);
    return rep;
}

KktReport kkt_check(const MatchingProblem& prob, const SparseSolution& sol) {
    check_problem(prob);
    const int D = static_cast<int>(prob.theta_block.cols());
    Eigen::VectorXd r = prob.response - prob.theta_block * sol.theta;
    if (sol.alpha.size() > 0) r -= prob.alpha_block * sol.alpha;
    const Eigen::VectorXd wr = prob.rule.weights.cwiseProduct(r);

    KktReport rep;
    rep.gradient.resize(D);
    for (int d = 0; d < D; ++d)
        rep.gradient[d] = 2.0 * prob.theta_block.col(d).dot(wr) / sol.scales[d];
    for (int d = 0; d < D; ++d) {
        const double theta_std = sol.theta[d] * sol.scales[d];
        if (theta_std == 0.0) {
            rep.max_violation_zero =
                std::max(rep.max_violation_zero, std::abs(rep.gradient[d]) - sol.lambda);
        } else {
            const double sign = theta_std > 0 ? 1.0 : -1.0;
            rep.max_violation_support = std::max(
                rep.max_violation_support, std::abs(rep.gradient[d] - sol.lambda * sign));
        }
    }
    return rep;
}

}  // namespace sem
