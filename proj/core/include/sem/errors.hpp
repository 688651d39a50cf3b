#pragma once

#include <stdexcept>
#include <string>

namespace sem {

/// Invalid user-facing configuration: bad flag value, malformed config file,
/// inconsistent option combinations.  CLI maps this to exit code 2.
struct config_error : std::runtime_error {
    explicit config_error(const std::string& msg) : std::runtime_error(msg) {}
};

/// Numerical failure: divergent integration, singular or degenerate selection
/// problems.  CLI maps this to exit code 3.
struct numeric_error : std::runtime_error {
    explicit numeric_error(const std::string& msg) : std::runtime_error(msg) {}
};

/// Divergence of a time integration; message names the first bad time point.
struct divergence_error : numeric_error {
    divergence_error(const std::string& msg, double t) : numeric_error(msg), time(t) {}
    double time;
};

}  // namespace sem
