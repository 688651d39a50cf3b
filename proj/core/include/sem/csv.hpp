#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

namespace sem {

/// Shortest decimal representation that round-trips the IEEE-754 value.
std::string format_double(double v);

/// Strict double parse; throws config_error on trailing garbage.
double parse_double(const std::string& s);

/// Multichannel time series in the `t,x1,..,xp` layout: values is p x n.
struct TimeSeriesCsv {
    Eigen::VectorXd times;
    Eigen::MatrixXd values;
    std::vector<std::string> labels;  // column labels after `t`
};

void write_time_series(const std::string& path, const Eigen::VectorXd& times,
                       const Eigen::MatrixXd& values,
                       const std::vector<std::string>& labels = {});

TimeSeriesCsv read_time_series(const std::string& path);

/// FNV-1a 64-bit content hash, used in run manifests.
std::uint64_t fnv1a_file(const std::string& path);

}  // namespace sem
