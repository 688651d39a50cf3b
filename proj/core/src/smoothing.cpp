#include "sem/smoothing.hpp"

#include <Eigen/SparseCholesky>
#include <Eigen/SparseCore>
#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "sem/errors.hpp"

namespace sem {

namespace {

// Gauss-Legendre abscissae/weights on [-1, 1], n = 1..8
struct GaussRule {
    std::vector<double> x, w;
};

GaussRule gauss_legendre(int n) {
    switch (n) {
        case 1: return {{0.0}, {2.0}};
        case 2: return {{-0.5773502691896257, 0.5773502691896257}, {1.0, 1.0}};
        case 3:
            return {{-0.7745966692414834, 0.0, 0.7745966692414834},
                    {5.0 / 9.0, 8.0 / 9.0, 5.0 / 9.0}};
        case 4:
            return {{-0.8611363115940526, -0.3399810435848563, 0.3399810435848563,
                     0.8611363115940526},
                    {0.3478548451374538, 0.6521451548625461, 0.6521451548625461,
                     0.3478548451374538}};
        case 5:
            return {{-0.9061798459386640, -0.5384693101056831, 0.0, 0.5384693101056831,
                     0.9061798459386640},
                    {0.2369268850561891, 0.4786286704993665, 0.5688888888888889,
                     0.4786286704993665, 0.2369268850561891}};
        case 6:
            return {{-0.9324695142031521, -0.6612093864662645, -0.2386191860831969,
                     0.2386191860831969, 0.6612093864662645, 0.9324695142031521},
                    {0.1713244923791704, 0.3607615730481386, 0.4679139345726910,
                     0.4679139345726910, 0.3607615730481386, 0.1713244923791704}};
        case 7:
            return {{-0.9491079123427585, -0.7415311855993945, -0.4058451513773972, 0.0,
                     0.4058451513773972, 0.7415311855993945, 0.9491079123427585},
                    {0.1294849661688697, 0.2797053914892766, 0.3818300505051189,
                     0.4179591836734694, 0.3818300505051189, 0.2797053914892766,
                     0.1294849661688697}};
        case 8:
            return {{-0.9602898564975363, -0.7966664774136267, -0.5255324099163290,
                     -0.1834346424956498, 0.1834346424956498, 0.5255324099163290,
                     0.7966664774136267, 0.9602898564975363},
                    {0.1012285362903763, 0.2223810344533745, 0.3137066458778873,
                     0.3626837833783620, 0.3626837833783620, 0.3137066458778873,
                     0.2223810344533745, 0.1012285362903763}};
        default: throw std::invalid_argument("Gauss rule supports 1..8 points");
    }
}

// knots[iv] <= x < knots[iv+1], clamped to the valid B-spline span so
// evaluation beyond the data extends the boundary polynomial piece
int find_interval(const Eigen::VectorXd& knots, int deg, double x) {
    const int lo = deg;
    const int hi = static_cast<int>(knots.size()) - deg - 2;
    if (x <= knots[lo]) return lo;
    if (x >= knots[hi + 1]) return hi;
    const double* it = std::upper_bound(knots.data() + lo, knots.data() + hi + 1, x);
    return static_cast<int>(it - knots.data()) - 1;
}

// values at x of the deg+1 B-splines of degree deg active on interval iv
// (Cox-de Boor triangle); out[j] corresponds to global index iv-deg+j
void bsplvb(const Eigen::VectorXd& knots, int deg, int iv, double x, double* out) {
    out[0] = 1.0;
    double left[16], right[16];
    for (int j = 1; j <= deg; ++j) {
        left[j] = x - knots[iv + 1 - j];
        right[j] = knots[iv + j] - x;
        double saved = 0.0;
        for (int r = 0; r < j; ++r) {
            const double term = out[r] / (right[r + 1] + left[j - r]);
            out[r] = saved + right[r + 1] * term;
            saved = left[j - r] * term;
        }
        out[j] = saved;
    }
}

// d^order evaluation of a locally supported coefficient set via repeated
// coefficient differencing; c has deg+1 entries for global indices iv-deg+j
double deboor_eval(const Eigen::VectorXd& knots, int deg, int iv, double x, int order,
                   double* c) {
    const int i0 = iv - deg;
    for (int r = 1; r <= order; ++r) {
        for (int j = deg; j >= r; --j) {
            const double den = knots[i0 + j + deg - r + 1] - knots[i0 + j];
            c[j] = den > 0 ? (deg - r + 1) * (c[j] - c[j - 1]) / den : 0.0;
        }
    }
    const int d2 = deg - order;
    double vals[16];
    bsplvb(knots, d2, iv, x, vals);
    double out = 0.0;
    for (int l = 0; l <= d2; ++l) out += vals[l] * c[order + l];
    return out;
}

// d^order values of all active basis functions at x; returns the first active
// global column index, writes deg+1 values
int active_basis(const Eigen::VectorXd& knots, int deg, double x, int order, double* out) {
    const int iv = find_interval(knots, deg, x);
    if (order == 0) {
        bsplvb(knots, deg, iv, x, out);
    } else {
        double c[16];
        for (int j = 0; j <= deg; ++j) {
            std::fill(c, c + deg + 1, 0.0);
            c[j] = 1.0;
            out[j] = deboor_eval(knots, deg, iv, x, order, c);
        }
    }
    return iv - deg;
}

// knot sites: the observation times, thinned to <= limit quantile sites
Eigen::VectorXd knot_sites(const Eigen::VectorXd& times, int limit) {
    const int n = static_cast<int>(times.size());
    if (n <= limit) return times;
    Eigen::VectorXd sites(limit);
    for (int j = 0; j < limit; ++j) {
        const int idx = static_cast<int>(std::llround(static_cast<double>(j) * (n - 1) / (limit - 1)));
        sites[j] = times[idx];
    }
    return sites;
}

Eigen::VectorXd build_knots(const Eigen::VectorXd& sites, int q) {
    const int order = 2 * q;
    const int ns = static_cast<int>(sites.size());
    Eigen::VectorXd knots(ns - 2 + 2 * order);
    for (int j = 0; j < order; ++j) {
        knots[j] = sites[0];
        knots[knots.size() - 1 - j] = sites[ns - 1];
    }
    for (int j = 1; j + 1 < ns; ++j) knots[order + j - 1] = sites[j];
    return knots;
}

struct SplineWorkspace {
    int q = 0, deg = 0, m = 0, n = 0;
    Eigen::VectorXd knots;
    Eigen::SparseMatrix<double> B;      // n x m design
    Eigen::SparseMatrix<double> BtB;    // m x m
    Eigen::SparseMatrix<double> Omega;  // m x m penalty of order q
    Eigen::VectorXd Bty;
    Eigen::VectorXd y;
    Eigen::VectorXd times;
    Eigen::MatrixXd BtB_dense;
};

SplineWorkspace make_workspace(const Eigen::VectorXd& times, const Eigen::VectorXd& y, int q) {
    const int n = static_cast<int>(times.size());
    if (y.size() != n) throw std::invalid_argument("smoother: times/values size mismatch");
    if (q < 1 || q > 6) throw std::invalid_argument("smoother: penalty order must be in 1..6");
    if (n < 2 * q) throw numeric_error("smoother needs at least 2q observations");
    for (int j = 1; j < n; ++j)
        if (!(times[j] > times[j - 1]))
            throw std::invalid_argument("smoother: times must be strictly increasing");

    SplineWorkspace ws;
    ws.q = q;
    ws.deg = 2 * q - 1;
    ws.n = n;
    ws.times = times;
    ws.y = y;
    const Eigen::VectorXd sites = knot_sites(times, 1500);
    ws.knots = build_knots(sites, q);
    ws.m = static_cast<int>(ws.knots.size()) - ws.deg - 1;

    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(static_cast<size_t>(n) * (ws.deg + 1));
    double vals[16];
    for (int j = 0; j < n; ++j) {
        const int c0 = active_basis(ws.knots, ws.deg, times[j], 0, vals);
        for (int l = 0; l <= ws.deg; ++l) trip.emplace_back(j, c0 + l, vals[l]);
    }
    ws.B.resize(n, ws.m);
    ws.B.setFromTriplets(trip.begin(), trip.end());
    ws.BtB = (ws.B.transpose() * ws.B).pruned();
    ws.Bty = ws.B.transpose() * y;

    // exact penalty: per knot span, q-point Gauss integrates the piecewise
    // polynomial integrand (degree 2q-2) exactly
    const GaussRule gl = gauss_legendre(q);
    std::vector<Eigen::Triplet<double>> ptrip;
    for (int iv = ws.deg; iv + ws.deg + 1 < static_cast<int>(ws.knots.size()); ++iv) {
        const double a = ws.knots[iv], b = ws.knots[iv + 1];
        if (!(b > a)) continue;
        for (size_t g = 0; g < gl.x.size(); ++g) {
            const double x = 0.5 * (a + b) + 0.5 * (b - a) * gl.x[g];
            const double w = 0.5 * (b - a) * gl.w[g];
            const int c0 = active_basis(ws.knots, ws.deg, x, q, vals);
            for (int r = 0; r <= ws.deg; ++r)
                for (int c = 0; c <= ws.deg; ++c)
                    ptrip.emplace_back(c0 + r, c0 + c, w * vals[r] * vals[c]);
        }
    }
    ws.Omega.resize(ws.m, ws.m);
    ws.Omega.setFromTriplets(ptrip.begin(), ptrip.end());
    ws.BtB_dense = Eigen::MatrixXd(ws.BtB);
    return ws;
}

struct FitResult {
    Eigen::VectorXd coef;
    double rss = 0.0, edf = 0.0;
};

FitResult fit_at(const SplineWorkspace& ws, double nu) {
    Eigen::SparseMatrix<double> M = ws.BtB + (ws.n * nu) * ws.Omega;
    Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> solver(M);
    if (solver.info() != Eigen::Success)
        throw numeric_error("smoother: penalized system factorization failed");
    FitResult fr;
    fr.coef = solver.solve(ws.Bty);
    fr.rss = (ws.y - ws.B * fr.coef).squaredNorm();
    fr.edf = solver.solve(ws.BtB_dense).trace();
    return fr;
}

SmoothedCurve curve_from(const SplineWorkspace& ws, double nu, const FitResult& fr) {
    SmoothedCurve c;
    c.q = ws.q;
    c.nu = nu;
    c.knots = ws.knots;
    c.coef = fr.coef;
    c.t_min = ws.times[0];
    c.t_max = ws.times[ws.n - 1];
    c.rss = fr.rss;
    c.edf = fr.edf;
    const double denom = 1.0 - fr.edf / ws.n;
    c.gcv = denom > 0 ? (fr.rss / ws.n) / (denom * denom)
                      : std::numeric_limits<double>::infinity();
    return c;
}

}  // namespace

double SmoothedCurve::value(double t) const { return derivative(t, 0); }

double SmoothedCurve::derivative(double t, int order) const {
    const int deg = 2 * q - 1;
    if (order < 0 || order > 2 * q - 2)
        throw std::invalid_argument("curve supports derivative orders 0.." +
                                    std::to_string(2 * q - 2));
    const int iv = find_interval(knots, deg, t);
    double c[16];
    for (int j = 0; j <= deg; ++j) c[j] = coef[iv - deg + j];
    return deboor_eval(knots, deg, iv, t, order, c);
}

SmoothedCurve fit_smoother(const Eigen::VectorXd& times, const Eigen::VectorXd& y, int q,
                           double nu) {
    if (!(nu >= 0)) throw std::invalid_argument("smoother: nu must be nonnegative");
    const SplineWorkspace ws = make_workspace(times, y, q);
    return curve_from(ws, nu, fit_at(ws, nu));
}

GcvSelection gcv_select(const Eigen::VectorXd& times, const Eigen::VectorXd& y, int q,
                        std::vector<double> nu_grid) {
    const SplineWorkspace ws = make_workspace(times, y, q);
    if (nu_grid.empty()) {
        const double tr_btb = ws.BtB_dense.trace();
        double tr_omega = 0.0;
        for (int c = 0; c < ws.m; ++c) tr_omega += ws.Omega.coeff(c, c);
        if (!(tr_omega > 0)) throw numeric_error("smoother: degenerate penalty");
        const double scale = tr_btb / (ws.n * tr_omega);
        const int grid_n = 40;
        nu_grid.resize(grid_n);
        for (int g = 0; g < grid_n; ++g)
            nu_grid[g] = scale * std::pow(10.0, -10.0 + 12.0 * g / (grid_n - 1));
    }

    const int grid_n = static_cast<int>(nu_grid.size());
    GcvSelection sel;
    sel.nu_grid = nu_grid;
    sel.gcv_values.assign(grid_n, std::numeric_limits<double>::quiet_NaN());
    double best = std::numeric_limits<double>::infinity();
    int best_idx = -1;
    FitResult best_fit;
    for (int g = 0; g < grid_n; ++g) {
        const double nu = sel.nu_grid[g];
        const FitResult fr = fit_at(ws, nu);
        if (fr.edf >= ws.n) continue;  // degenerate: smoother reproduces the data
        const double denom = 1.0 - fr.edf / ws.n;
        const double gcv = (fr.rss / ws.n) / (denom * denom);
        if (!std::isfinite(gcv)) continue;
        sel.gcv_values[g] = gcv;
        if (gcv <= best) {  // ties resolve toward larger nu
            best = gcv;
            best_idx = g;
            best_fit = fr;
        }
    }
    if (best_idx < 0) throw numeric_error("smoother: GCV degenerate on the entire nu grid");
    sel.fit = curve_from(ws, sel.nu_grid[best_idx], best_fit);
    return sel;
}

Eigen::MatrixXd hat_matrix(const Eigen::VectorXd& times, int q, double nu) {
    const Eigen::VectorXd zero = Eigen::VectorXd::Zero(times.size());
    const SplineWorkspace ws = make_workspace(times, zero, q);
    Eigen::SparseMatrix<double> M = ws.BtB + (ws.n * nu) * ws.Omega;
    Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> solver(M);
    if (solver.info() != Eigen::Success)
        throw numeric_error("smoother: penalized system factorization failed");
    const Eigen::MatrixXd Bd(ws.B);
    return Bd * solver.solve(Bd.transpose());
}

Eigen::MatrixXd SmoothedSet::resample(const Eigen::VectorXd& times, int order) const {
    Eigen::MatrixXd out(channels(), times.size());
    for (int i = 0; i < channels(); ++i)
        for (int j = 0; j < times.size(); ++j) out(i, j) = curves[i].derivative(times[j], order);
    return out;
}

SmoothedSet smooth_observations(const NoisyObservations& obs, int q) {
    SmoothedSet set;
    set.horizon = obs.grid.horizon;
    const int p = static_cast<int>(obs.values.rows());
    set.curves.reserve(p);
    for (int i = 0; i < p; ++i)
        set.curves.push_back(gcv_select(obs.grid.times, obs.values.row(i).transpose(), q).fit);
    return set;
}

}  // namespace sem
