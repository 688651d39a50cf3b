#pragma once

#include <Eigen/Dense>

namespace sem {

/// Strictly increasing sample times contained in [0, horizon].
struct SimulationGrid {
    Eigen::VectorXd times;
    double horizon = 0.0;

    int size() const { return static_cast<int>(times.size()); }
};

/// Evenly spaced grid t_j = j * horizon / (n-1), j = 0..n-1.
SimulationGrid make_grid(int n, double horizon);

/// Grid from explicit times; validates ordering and containment in [0, horizon].
SimulationGrid make_grid(Eigen::VectorXd times, double horizon);

/// Trapezoid nodes and weights over a grid.  Weights are positive and sum to
/// the grid span.
struct QuadratureRule {
    Eigen::VectorXd nodes;
    Eigen::VectorXd weights;

    int size() const { return static_cast<int>(nodes.size()); }
};

QuadratureRule trapezoid_rule(const SimulationGrid& grid);
QuadratureRule trapezoid_rule(const Eigen::VectorXd& nodes);

}  // namespace sem
