#include "sem/evaluation.hpp"

#include <cmath>
#include <fstream>
#include <stdexcept>

#include "sem/csv.hpp"
#include "sem/errors.hpp"

namespace sem {

double rer(const std::vector<SparseSolution>& fits, const OdeSystem& truth,
           const BasisLibrary& lib, const Eigen::MatrixXd& sample_states,
           const Eigen::VectorXd& sample_times) {
    const int p = truth.p;
    const int M = static_cast<int>(sample_states.cols());
    if (static_cast<int>(fits.size()) != p)
        throw std::invalid_argument("rer: one fit per equation required");
    if (sample_states.rows() != p || sample_times.size() != M)
        throw std::invalid_argument("rer: sample states must be p x M with M times");

    Eigen::MatrixXd H(M, lib.size());
    for (int j = 0; j < M; ++j)
        H.row(j) = evaluate(lib, sample_states.col(j), sample_times[j]).transpose();

    double total = 0.0;
    for (int i = 0; i < p; ++i) {
        const Eigen::VectorXd fhat = H * fits[i].beta();
        double num = 0.0, den = 0.0;
        for (int j = 0; j < M; ++j) {
            const double f = truth.driving[i](sample_states.col(j), sample_times[j]);
            const double d = fhat[j] - f;
            num += d * d;
            den += f * f;
        }
        if (den == 0.0)
            throw std::invalid_argument("rer: true driving function vanishes on all samples");
        total += std::sqrt(num / den);
    }
    return total / p;
}

namespace {

Eigen::MatrixXi adjacency_impl(const std::vector<Eigen::VectorXd>& omegas,
                               const std::vector<Eigen::VectorXd>& betas,
                               const BasisLibrary& lib, int p) {
    Eigen::MatrixXi a = Eigen::MatrixXi::Zero(p, p);
    for (int i = 0; i < p; ++i) {
        for (int d = 0; d < lib.size(); ++d) {
            if (betas[i][d] == 0.0) continue;
            for (int j = 0; j < p; ++j)
                if (depends_on(lib.features[d], j)) a(i, j) = 1;
        }
        if (omegas[i].cwiseAbs().maxCoeff() > 0.0) a(i, i) = 1;
    }
    return a;
}

}  // namespace

Eigen::MatrixXi adjacency_from_solutions(const std::vector<SparseSolution>& fits,
                                         const BasisLibrary& lib, int p) {
    if (static_cast<int>(fits.size()) != p)
        throw std::invalid_argument("adjacency: one fit per equation required");
    std::vector<Eigen::VectorXd> omegas(p), betas(p);
    for (int i = 0; i < p; ++i) {
        omegas[i] = fits[i].K > 1 ? fits[i].omega() : Eigen::VectorXd::Zero(1);
        betas[i] = fits[i].beta();
        if (betas[i].size() != lib.size())
            throw std::invalid_argument("adjacency: fit beta does not match the library");
    }
    return adjacency_impl(omegas, betas, lib, p);
}

Eigen::MatrixXi adjacency_from_theta(const Eigen::MatrixXd& theta, const BasisLibrary& lib,
                                     int K) {
    const int p = static_cast<int>(theta.rows());
    if (theta.cols() != K - 1 + lib.size())
        throw std::invalid_argument("adjacency: theta must be p x (K-1+D)");
    std::vector<Eigen::VectorXd> omegas(p), betas(p);
    for (int i = 0; i < p; ++i) {
        omegas[i] = K > 1 ? (-theta.row(i).head(K - 1).transpose()).eval()
                          : Eigen::VectorXd::Zero(1);
        betas[i] = theta.row(i).tail(lib.size()).transpose();
    }
    return adjacency_impl(omegas, betas, lib, p);
}

double matching_accuracy(const Eigen::MatrixXi& estimated, const Eigen::MatrixXi& truth) {
    if (estimated.rows() != truth.rows() || estimated.cols() != truth.cols())
        throw std::invalid_argument("matching accuracy needs same-shape adjacencies");
    const int p = static_cast<int>(truth.rows());
    int agree = 0;
    for (int i = 0; i < p; ++i)
        for (int j = 0; j < p; ++j)
            if ((estimated(i, j) != 0) == (truth(i, j) != 0)) ++agree;
    return static_cast<double>(agree) / (static_cast<double>(p) * p);
}

namespace {

VectorField field_on_grid(double pos_lo, double pos_hi, double vel_lo, double vel_hi,
                          int resolution,
                          const std::function<double(double, double)>& accel) {
    if (resolution < 2) throw std::invalid_argument("vector field needs resolution >= 2");
    VectorField f;
    f.positions.setLinSpaced(resolution, pos_lo, pos_hi);
    f.velocities.setLinSpaced(resolution, vel_lo, vel_hi);
    f.dx.resize(resolution, resolution);
    f.dv.resize(resolution, resolution);
    f.magnitude.resize(resolution, resolution);
    for (int a = 0; a < resolution; ++a) {
        for (int b = 0; b < resolution; ++b) {
            const double v = f.velocities[b];
            const double acc = accel(f.positions[a], v);
            f.dx(a, b) = v;
            f.dv(a, b) = acc;
            f.magnitude(a, b) = std::hypot(v, acc);
        }
    }
    return f;
}

}  // namespace

VectorField vector_field(const OdeSystem& sys, int equation, double pos_lo, double pos_hi,
                         double vel_lo, double vel_hi, int resolution,
                         const Eigen::VectorXd& pinned) {
    if (sys.K != 2) throw std::invalid_argument("phase-plane field needs a second-order system");
    if (equation < 0 || equation >= sys.p) throw std::invalid_argument("equation index out of range");
    Eigen::VectorXd z = Eigen::VectorXd::Zero(sys.p * sys.K);
    if (pinned.size() == sys.p * sys.K)
        z = pinned;
    else if (pinned.size() == sys.p)
        z.head(sys.p) = pinned;
    else if (pinned.size() != 0)
        throw std::invalid_argument("pinned state must hold p or p*K entries");
    return field_on_grid(pos_lo, pos_hi, vel_lo, vel_hi, resolution, [&](double x, double v) {
        Eigen::VectorXd state = z;
        state[equation] = x;
        state[sys.p + equation] = v;
        const Eigen::VectorXd dz = companion_rhs(sys, state, 0.0);
        return dz[sys.p + equation];
    });
}

VectorField vector_field(const SparseSolution& fit, const BasisLibrary& lib, int p,
                         double pos_lo, double pos_hi, double vel_lo, double vel_hi,
                         int resolution, const Eigen::VectorXd& pinned) {
    if (fit.K != 2) throw std::invalid_argument("phase-plane field needs a second-order fit");
    if (fit.equation < 0 || fit.equation >= p)
        throw std::invalid_argument("equation index out of range");
    Eigen::VectorXd x0 = Eigen::VectorXd::Zero(p);
    if (pinned.size() == p)
        x0 = pinned;
    else if (pinned.size() != 0)
        throw std::invalid_argument("pinned state must hold p entries");
    const double omega1 = fit.omega()[0];
    const Eigen::VectorXd beta = fit.beta();
    return field_on_grid(pos_lo, pos_hi, vel_lo, vel_hi, resolution, [&, x0](double x, double v) {
        Eigen::VectorXd state = x0;
        state[fit.equation] = x;
        return evaluate(lib, state, 0.0).dot(beta) - omega1 * v;
    });
}

void write_vector_field_csv(const std::string& path, const VectorField& field) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open " + path + " for writing");
    out << "x,v,dx,dv,magnitude\n";
    for (int a = 0; a < field.positions.size(); ++a)
        for (int b = 0; b < field.velocities.size(); ++b)
            out << format_double(field.positions[a]) << ',' << format_double(field.velocities[b])
                << ',' << format_double(field.dx(a, b)) << ',' << format_double(field.dv(a, b))
                << ',' << format_double(field.magnitude(a, b)) << '\n';
    if (!out) throw std::runtime_error("failed writing " + path);
}

OdeSystem discovered_system(const std::vector<SparseSolution>& fits, const BasisLibrary& lib,
                            int K, double horizon) {
    const int p = static_cast<int>(fits.size());
    if (p < 1) throw std::invalid_argument("discovered system needs at least one fit");
    OdeSystem sys;
    sys.p = p;
    sys.K = K;
    sys.horizon = horizon;
    sys.omega.resize(p, std::max(K - 1, 0));
    sys.driving.resize(p);
    Eigen::MatrixXd theta(p, K - 1 + lib.size());
    for (int i = 0; i < p; ++i) {
        if (fits[i].K != K || fits[i].beta().size() != lib.size())
            throw std::invalid_argument("discovered system: fit shape mismatch");
        if (K > 1) sys.omega.row(i) = fits[i].omega().transpose();
        const Eigen::VectorXd beta = fits[i].beta();
        sys.driving[i] = [beta, lib](const Eigen::VectorXd& x, double t) {
            return evaluate(lib, x, t).dot(beta);
        };
        theta.row(i) = fits[i].theta.transpose();
    }
    sys.init = Eigen::VectorXd::Zero(p * K);
    sys.true_theta = theta;
    return sys;
}

std::optional<Eigen::VectorXd> predict_forward(const OdeSystem& model,
                                               const Eigen::VectorXd& init, double t0,
                                               double dt, int min_substeps) {
    if (init.size() != model.p * model.K)
        throw std::invalid_argument("predict_forward: init must stack p*K entries");
    if (!(dt >= 0)) throw std::invalid_argument("predict_forward: dt must be nonnegative");
    if (dt == 0.0) return init;
    const int substeps = std::max(min_substeps, 1);
    auto rhs = [&](const Eigen::VectorXd& z, double t) { return companion_rhs(model, z, t); };
    Eigen::VectorXd z;
    try {
        z = rk4_advance(rhs, init, t0, dt, substeps);
    } catch (const numeric_error&) {
        return std::nullopt;
    }
    if (!z.allFinite()) return std::nullopt;
    return z;
}

double rpe(const Eigen::MatrixXd& predicted, const Eigen::MatrixXd& reference) {
    if (predicted.rows() != reference.rows() || predicted.cols() != reference.cols())
        throw std::invalid_argument("rpe needs same-shape prediction and reference");
    const int p = static_cast<int>(reference.rows());
    if (p == 0 || reference.cols() == 0) throw std::invalid_argument("rpe needs data");
    double total = 0.0;
    for (int i = 0; i < p; ++i) {
        const double den = reference.row(i).squaredNorm();
        if (den == 0.0) throw std::invalid_argument("rpe: reference channel has zero energy");
        total += (predicted.row(i) - reference.row(i)).squaredNorm() / den;
    }
    return std::sqrt(total) / p;
}

}  // namespace sem
