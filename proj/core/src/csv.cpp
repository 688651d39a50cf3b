#include "sem/csv.hpp"

#include <charconv>
#include <cstdint>
#include <fstream>
#include <sstream>

#include "sem/errors.hpp"

namespace sem {

std::string format_double(double v) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

double parse_double(const std::string& s) {
    double v = 0;
    auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc{} || res.ptr != s.data() + s.size())
        throw config_error("not a number: '" + s + "'");
    return v;
}

static std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string field;
    std::stringstream ss(line);
    while (std::getline(ss, field, ',')) out.push_back(field);
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

void write_time_series(const std::string& path, const Eigen::VectorXd& times,
                       const Eigen::MatrixXd& values, const std::vector<std::string>& labels) {
    const int p = static_cast<int>(values.rows());
    const int n = static_cast<int>(values.cols());
    if (static_cast<int>(times.size()) != n)
        throw std::invalid_argument("time series: times/values size mismatch");
    std::ofstream f(path);
    if (!f) throw config_error("cannot write " + path);
    f << "t";
    for (int i = 0; i < p; ++i) {
        if (!labels.empty())
            f << "," << labels.at(i);
        else
            f << ",x" << (i + 1);
    }
    f << "\n";
    for (int j = 0; j < n; ++j) {
        f << format_double(times[j]);
        for (int i = 0; i < p; ++i) f << "," << format_double(values(i, j));
        f << "\n";
    }
}

TimeSeriesCsv read_time_series(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw config_error("cannot read " + path);
    std::string line;
    if (!std::getline(f, line)) throw config_error(path + ": empty file");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    auto header = split_csv_line(line);
    if (header.empty() || header[0] != "t")
        throw config_error(path + ": first column must be 't'");
    const int p = static_cast<int>(header.size()) - 1;
    if (p < 1) throw config_error(path + ": no value columns");

    std::vector<double> times;
    std::vector<std::vector<double>> cols(p);
    int lineno = 1;
    while (std::getline(f, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        auto fields = split_csv_line(line);
        if (static_cast<int>(fields.size()) != p + 1)
            throw config_error(path + ":" + std::to_string(lineno) + ": expected " +
                               std::to_string(p + 1) + " fields");
        times.push_back(parse_double(fields[0]));
        for (int i = 0; i < p; ++i) cols[i].push_back(parse_double(fields[i + 1]));
    }
    const int n = static_cast<int>(times.size());
    if (n < 2) throw config_error(path + ": need at least 2 rows");

    TimeSeriesCsv out;
    out.times = Eigen::Map<Eigen::VectorXd>(times.data(), n);
    out.values.resize(p, n);
    for (int i = 0; i < p; ++i)
        out.values.row(i) = Eigen::Map<Eigen::VectorXd>(cols[i].data(), n).transpose();
    out.labels.assign(header.begin() + 1, header.end());
    return out;
}

std::uint64_t fnv1a_file(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw config_error("cannot read " + path);
    std::uint64_t h = 1469598103934665603ull;
    char buf[4096];
    while (f.read(buf, sizeof(buf)) || f.gcount() > 0) {
        for (std::streamsize i = 0; i < f.gcount(); ++i) {
            h ^= static_cast<unsigned char>(buf[i]);
            h *= 1099511628211ull;
        }
        if (!f) break;
    }
    return h;
}

}  // namespace sem
