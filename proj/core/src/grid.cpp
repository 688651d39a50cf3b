#include "sem/grid.hpp"

#include <stdexcept>

#include "sem/errors.hpp"

namespace sem {

SimulationGrid make_grid(int n, double horizon) {
    if (n < 2) throw std::invalid_argument("grid needs at least 2 points");
    if (!(horizon > 0)) throw std::invalid_argument("grid horizon must be positive");
    Eigen::VectorXd t(n);
    for (int j = 0; j < n; ++j) t[j] = horizon * j / (n - 1);
    t[n - 1] = horizon;
    return SimulationGrid{std::move(t), horizon};
}

SimulationGrid make_grid(Eigen::VectorXd times, double horizon) {
    const int n = static_cast<int>(times.size());
    if (n < 2) throw std::invalid_argument("grid needs at least 2 points");
    if (!(horizon > 0)) throw std::invalid_argument("grid horizon must be positive");
    if (times[0] < 0 || times[n - 1] > horizon)
        throw std::invalid_argument("grid times must lie in [0, horizon]");
    for (int j = 1; j < n; ++j)
        if (!(times[j] > times[j - 1]))
            throw std::invalid_argument("grid times must be strictly increasing");
    return SimulationGrid{std::move(times), horizon};
}

QuadratureRule trapezoid_rule(const Eigen::VectorXd& nodes) {
    const int n = static_cast<int>(nodes.size());
    if (n < 2) throw std::invalid_argument("trapezoid rule needs at least 2 nodes");
    Eigen::VectorXd w(n);
    w[0] = 0.5 * (nodes[1] - nodes[0]);
    for (int j = 1; j + 1 < n; ++j) w[j] = 0.5 * (nodes[j + 1] - nodes[j - 1]);
    w[n - 1] = 0.5 * (nodes[n - 1] - nodes[n - 2]);
    return QuadratureRule{nodes, std::move(w)};
}

QuadratureRule trapezoid_rule(const SimulationGrid& grid) {
    return trapezoid_rule(grid.times);
}

}  // namespace sem
