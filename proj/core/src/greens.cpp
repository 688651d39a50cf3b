#include "sem/greens.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace sem {

GreensKernel greens(int k) {
    if (k < 0) throw std::invalid_argument("kernel order must be >= 0");
    GreensKernel g;
    g.order = k;
    return g;
}

GreensKernel perturbed_greens(int k, Eigen::MatrixXd v_samples, Eigen::VectorXd v_nodes) {
    if (k < 1) throw std::invalid_argument("perturbed kernels need order >= 1");
    if (v_samples.rows() != k || v_samples.cols() != v_nodes.size())
        throw std::invalid_argument("perturbation samples must be k x nodes");
    GreensKernel g;
    g.order = k;
    g.v_samples = std::move(v_samples);
    g.v_nodes = std::move(v_nodes);
    return g;
}

static double canonical_value(int k, double t, double s) {
    if (t < s) return 0.0;
    double v = 1.0;
    for (int m = 1; m < k; ++m) v *= (t - s) / m;
    return v;
}

double interp_linear(const Eigen::VectorXd& nodes, const Eigen::VectorXd& samples, double t) {
    const int n = static_cast<int>(nodes.size());
    if (t <= nodes[0]) return samples[0];
    if (t >= nodes[n - 1]) return samples[n - 1];
    const double* lo = std::upper_bound(nodes.data(), nodes.data() + n, t);
    const int j = static_cast<int>(lo - nodes.data()) - 1;
    const double a = (t - nodes[j]) / (nodes[j + 1] - nodes[j]);
    return (1 - a) * samples[j] + a * samples[j + 1];
}

double greens_value(const GreensKernel& kernel, double t, double s) {
    if (kernel.order == 0)
        throw std::invalid_argument("order-0 kernel has no pointwise value");
    double v = canonical_value(kernel.order, t, s);
    if (kernel.perturbed()) {
        double tp = 1.0;
        for (int l = 0; l < kernel.order; ++l) {
            v += tp * interp_linear(kernel.v_nodes, kernel.v_samples.row(l).transpose(), s);
            tp *= t;
        }
    }
    return v;
}

Eigen::MatrixXd null_basis(int k, const Eigen::VectorXd& times) {
    Eigen::MatrixXd phi(times.size(), k);
    for (int i = 0; i < times.size(); ++i) {
        double tp = 1.0;
        for (int l = 0; l < k; ++l) {
            phi(i, l) = tp;
            tp *= times[i];
        }
    }
    return phi;
}

// index of the node equal to t, or -1; grids shared between eval times and
// rule nodes compare equal bit-for-bit, tolerance covers reconstructed grids
static int node_index(const Eigen::VectorXd& nodes, double t, double tol) {
    const double* lo = std::lower_bound(nodes.data(), nodes.data() + nodes.size(), t - tol);
    const int j = static_cast<int>(lo - nodes.data());
    if (j < nodes.size() && std::abs(nodes[j] - t) <= tol) return j;
    return -1;
}

// weights for int over [nodes[0], nodes[jt]] on the leading nodes: trapezoid
// plus Gregory end corrections on uniform grids (h^4 instead of h^2; the
// plain rule's h^2 term is a smooth functional of the integrand that the
// regression cannot always absorb). Two panels give Simpson, three give 3/8;
// all weights stay positive.
static Eigen::VectorXd truncated_weights(const Eigen::VectorXd& nodes, int jt) {
    Eigen::VectorXd w = Eigen::VectorXd::Zero(jt + 1);
    if (jt < 1) return w;
    for (int j = 0; j < jt; ++j) {
        const double half = 0.5 * (nodes[j + 1] - nodes[j]);
        w[j] += half;
        w[j + 1] += half;
    }
    if (jt < 2) return w;
    const double h = nodes[1] - nodes[0];
    for (int j = 0; j < jt; ++j)
        if (std::abs(nodes[j + 1] - nodes[j] - h) > 1e-9 * h) return w;
    w[0] -= 3.0 * h / 24;
    w[1] += 4.0 * h / 24;
    w[2] -= h / 24;
    w[jt] -= 3.0 * h / 24;
    w[jt - 1] += 4.0 * h / 24;
    w[jt - 2] -= h / 24;
    return w;
}

Eigen::MatrixXd kernel_matrix(const GreensKernel& kernel, const QuadratureRule& rule,
                              const Eigen::VectorXd& eval_times) {
    const int n = rule.size();
    const int ne = static_cast<int>(eval_times.size());
    const double span = rule.nodes[n - 1] - rule.nodes[0];
    const double tol = 1e-12 * std::max(1.0, span);
    Eigen::MatrixXd M = Eigen::MatrixXd::Zero(ne, n);

    if (kernel.order == 0) {
        // Dirac: evaluation (linear interpolation off-node)
        for (int i = 0; i < ne; ++i) {
            const double t = eval_times[i];
            const int j = node_index(rule.nodes, t, tol);
            if (j >= 0) {
                M(i, j) = 1.0;
            } else if (t <= rule.nodes[0]) {
                M(i, 0) = 1.0;
            } else if (t >= rule.nodes[n - 1]) {
                M(i, n - 1) = 1.0;
            } else {
                const double* lo = std::upper_bound(rule.nodes.data(), rule.nodes.data() + n, t);
                const int jj = static_cast<int>(lo - rule.nodes.data()) - 1;
                const double a = (t - rule.nodes[jj]) / (rule.nodes[jj + 1] - rule.nodes[jj]);
                M(i, jj) = 1 - a;
                M(i, jj + 1) = a;
            }
        }
        return M;
    }

    const int k = kernel.order;
    for (int i = 0; i < ne; ++i) {
        const double t = eval_times[i];
        const int jt = node_index(rule.nodes, t, tol);
        if (jt >= 0) {
            // t on a node: corrected truncated rule over [0, t]; the step
            // kernel (k=1) takes the integrand's left limit at s=t
            M.row(i).head(jt + 1) = truncated_weights(rule.nodes, jt);
            if (k > 1)
                for (int j = 0; j <= jt; ++j) M(i, j) *= canonical_value(k, t, rule.nodes[j]);
        } else if (k == 1) {
            // off-node t: plain trapezoid with a partial end cell
            if (t > rule.nodes[0]) {
                const double* lo = std::upper_bound(rule.nodes.data(), rule.nodes.data() + n, t);
                const int j = std::min(static_cast<int>(lo - rule.nodes.data()) - 1, n - 1);
                for (int l = 0; l < j; ++l) M(i, l) = rule.weights[l];
                if (j > 0) M(i, j) = 0.5 * (rule.nodes[j] - rule.nodes[j - 1]);
                if (j < n - 1) {
                    const double d = t - rule.nodes[j];
                    const double a = d / (rule.nodes[j + 1] - rule.nodes[j]);
                    M(i, j) += 0.5 * d * (1 + (1 - a));
                    M(i, j + 1) += 0.5 * d * a;
                } else {
                    M(i, j) += t - rule.nodes[j];
                }
            }
        } else {
            for (int j = 0; j < n; ++j)
                M(i, j) = rule.weights[j] * canonical_value(k, t, rule.nodes[j]);
        }
    }

    if (kernel.perturbed()) {
        if (kernel.v_nodes.size() != n)
            throw std::invalid_argument("perturbation sampled on a different rule");
        const Eigen::MatrixXd phi = null_basis(k, eval_times);            // ne x k
        const Eigen::MatrixXd vw =
            kernel.v_samples * rule.weights.asDiagonal();                  // k x n
        M.noalias() += phi * vw;
    }
    return M;
}

Eigen::MatrixXd integral_transform(const GreensKernel& kernel, const Eigen::MatrixXd& samples,
                                   const QuadratureRule& rule, const Eigen::VectorXd& eval_times) {
    if (samples.rows() != rule.size())
        throw std::invalid_argument("sample rows must match rule nodes");
    return kernel_matrix(kernel, rule, eval_times) * samples;
}

Eigen::VectorXd integral_transform(const GreensKernel& kernel, const Eigen::VectorXd& samples,
                                   const QuadratureRule& rule, const Eigen::VectorXd& eval_times) {
    return integral_transform(kernel, Eigen::MatrixXd(samples), rule, eval_times).col(0);
}

}  // namespace sem
