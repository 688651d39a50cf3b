#include "sem/systems.hpp"

#include <cmath>
#include <random>

#include "sem/basis.hpp"
#include "sem/errors.hpp"

namespace sem {

Eigen::VectorXd rk4_advance(const std::function<Eigen::VectorXd(const Eigen::VectorXd&, double)>& rhs,
                            Eigen::VectorXd z, double t0, double dt, int substeps) {
    if (substeps < 1) substeps = 1;
    const double h = dt / substeps;
    double t = t0;
    for (int s = 0; s < substeps; ++s) {
        const Eigen::VectorXd k1 = rhs(z, t);
        const Eigen::VectorXd k2 = rhs(z + 0.5 * h * k1, t + 0.5 * h);
        const Eigen::VectorXd k3 = rhs(z + 0.5 * h * k2, t + 0.5 * h);
        const Eigen::VectorXd k4 = rhs(z + h * k3, t + h);
        z += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        t = t0 + (s + 1) * h;
    }
    return z;
}

Eigen::VectorXd companion_rhs(const OdeSystem& sys, const Eigen::VectorXd& z, double t) {
    const int p = sys.p, K = sys.K;
    Eigen::VectorXd dz(p * K);
    dz.head(p * (K - 1)) = z.tail(p * (K - 1));
    const Eigen::VectorXd x = z.head(p);
    for (int i = 0; i < p; ++i) {
        double top = sys.driving[i](x, t);
        for (int l = 1; l < K; ++l) top -= sys.omega(i, l - 1) * z[l * p + i];
        dz[(K - 1) * p + i] = top;
    }
    return dz;
}

static void validate(const OdeSystem& sys) {
    if (sys.p < 1 || sys.K < 1) throw std::invalid_argument("system needs p >= 1, K >= 1");
    if (static_cast<int>(sys.driving.size()) != sys.p)
        throw std::invalid_argument("system needs one driving function per equation");
    if (sys.K > 1 && (sys.omega.rows() != sys.p || sys.omega.cols() != sys.K - 1))
        throw std::invalid_argument("omega must be p x (K-1)");
    if (static_cast<int>(sys.init.size()) != sys.p * sys.K)
        throw std::invalid_argument("init must have length p*K");
}

TrajectorySet integrate(const OdeSystem& sys, const SimulationGrid& grid) {
    validate(sys);
    const int p = sys.p, K = sys.K, n = grid.size();
    auto rhs = [&sys](const Eigen::VectorXd& z, double t) { return companion_rhs(sys, z, t); };

    TrajectorySet out;
    out.grid = grid;
    out.values.resize(p, n);
    out.derivatives.assign(K + 1, Eigen::MatrixXd(p, n));

    const double h_max = grid.horizon / 2048.0;
    Eigen::VectorXd z = sys.init;
    for (int j = 0; j < n; ++j) {
        if (j > 0) {
            const double dt = grid.times[j] - grid.times[j - 1];
            const int substeps = std::max(1, static_cast<int>(std::ceil(dt / h_max)));
            z = rk4_advance(rhs, z, grid.times[j - 1], dt, substeps);
        }
        if (!z.allFinite())
            throw divergence_error("integration diverged at t = " + std::to_string(grid.times[j]),
                                   grid.times[j]);
        for (int l = 0; l < K; ++l) out.derivatives[l].col(j) = z.segment(l * p, p);
        out.derivatives[K].col(j) = companion_rhs(sys, z, grid.times[j]).tail(p);
        out.values.col(j) = z.head(p);
    }
    out.derivatives[0] = out.values;
    return out;
}

NoisyObservations add_noise(const TrajectorySet& traj, double gamma, std::uint64_t seed) {
    if (gamma < 0) throw std::invalid_argument("noise scale must be nonnegative");
    const int p = static_cast<int>(traj.values.rows());
    const int n = static_cast<int>(traj.values.cols());
    const QuadratureRule rule = trapezoid_rule(traj.grid);

    NoisyObservations obs;
    obs.grid = traj.grid;
    obs.gamma = gamma;
    obs.seed = seed;
    obs.sigma.resize(p);
    obs.values.resize(p, n);

    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    for (int i = 0; i < p; ++i) {
        const double energy = rule.weights.dot(traj.values.row(i).cwiseAbs2().transpose().matrix());
        obs.sigma[i] = gamma * std::sqrt(energy / traj.grid.horizon);
        for (int j = 0; j < n; ++j)
            obs.values(i, j) = traj.values(i, j) + obs.sigma[i] * normal(rng);
    }
    return obs;
}

OdeSystem pendulum_system() {
    OdeSystem sys;
    sys.p = 1;
    sys.K = 2;
    sys.horizon = 20.0;
    sys.driving = {[](const Eigen::VectorXd& x, double) { return -std::sin(x[0]); }};
    sys.omega = Eigen::MatrixXd::Zero(1, 1);
    sys.init = Eigen::Vector2d(0.25, -0.25);

    // coefficients against poly_trig_library(1, 4, true): (1, sin, cos, x, .., x^4)
    Eigen::MatrixXd theta = Eigen::MatrixXd::Zero(1, 1 + 7);
    theta(0, 2) = -1.0;  // sin(x1), after the -omega slot
    sys.true_theta = theta;
    return sys;
}

Eigen::VectorXd pendulum_random_init(std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(-0.5, 0.5);
    Eigen::Vector2d init;
    init[0] = u(rng);
    init[1] = u(rng);
    return init;
}

static std::vector<int> default_shift(int m) {
    std::vector<int> tau(m);
    for (int i = 0; i < m; ++i) tau[i] = (i + 1) % m + 1;
    return tau;
}

static void validate_permutation(const std::vector<int>& tau, int m, const char* name) {
    if (static_cast<int>(tau.size()) != m)
        throw config_error(std::string(name) + " must list " + std::to_string(m) + " entries");
    std::vector<bool> seen(m, false);
    for (int v : tau) {
        if (v < 1 || v > m || seen[v - 1])
            throw config_error(std::string(name) + " must be a permutation of 1.." + std::to_string(m));
        seen[v - 1] = true;
    }
}

OdeSystem ddm_system(const std::vector<int>& tau1_in, const std::vector<int>& tau2_in) {
    const int half = 20, p = 40;
    const std::vector<int> tau1 = tau1_in.empty() ? default_shift(half) : tau1_in;
    const std::vector<int> tau2 = tau2_in.empty() ? default_shift(half) : tau2_in;
    validate_permutation(tau1, half, "tau1");
    validate_permutation(tau2, half, "tau2");

    OdeSystem sys;
    sys.p = p;
    sys.K = 2;
    sys.horizon = 5.0;
    sys.omega.resize(p, 1);
    sys.init.resize(2 * p);
    sys.driving.resize(p);

    Eigen::MatrixXd theta = Eigen::MatrixXd::Zero(p, 1 + 1 + p);
    for (int i1 = 1; i1 <= p; ++i1) {
        const int i = i1 - 1;
        const bool first = i1 <= half;
        const double self = first ? -4.0 : -3.5;
        const double couple = (i1 % 2 == 0 ? 1.0 : -1.0) * (first ? 1.2 : 2.0);
        // velocity term: the operator side carries +b dX/dt, i.e. the equation
        // reads d^2 X_i = self X_i + couple X_tau - b dX_i/dt (damped, stable)
        const double b = first ? 1.3 : 2.0;
        const int local = first ? i1 : i1 - half;
        const int partner = (first ? tau1[local - 1] : half + tau2[local - 1]) - 1;

        sys.omega(i, 0) = b;
        sys.driving[i] = [i, partner, self, couple](const Eigen::VectorXd& x, double) {
            return self * x[i] + couple * x[partner];
        };
        theta(i, 0) = -b;
        theta(i, 2 + i) += self;     // library order: (1, x1, .., x40) after the -omega slot
        theta(i, 2 + partner) += couple;

        if (first) {
            sys.init[i] = 1.0 - (i1 - 1) / 38.0;
            sys.init[p + i] = -1.5 + (i1 % 2 == 0 ? 0.5 : -0.5);
        } else {
            sys.init[i] = 1.5 - (i1 - 21) / 38.0;
            sys.init[p + i] = -1.5 + 2.0 * (i1 - 21) / 19.0;
        }
    }
    sys.true_theta = theta;
    return sys;
}

}  // namespace sem
