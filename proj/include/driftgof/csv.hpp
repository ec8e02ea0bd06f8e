#pragma once

#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "driftgof/simulate.hpp"
#include "driftgof/step_process.hpp"

namespace driftgof {

class CsvError : public std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Full-precision double formatting used for every CSV payload.
inline std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

inline void write_path_csv(std::ostream& os, const Path& p) {
    os << "t,x\n";
    for (std::size_t i = 0; i < p.values.size(); ++i) {
        const double t = p.t0 + static_cast<double>(i) * p.dt;
        os << format_double(t) << ',' << format_double(p.values[i]) << '\n';
    }
}

inline void write_path_csv_file(const std::string& file, const Path& p) {
    std::ofstream os(file);
    if (!os) throw CsvError("cannot open '" + file + "' for writing");
    write_path_csv(os, p);
}

/// Reads the `t,x` format back (or ingests externally observed data in the
/// same shape). The time column must advance by a uniform step.
inline Path read_path_csv(std::istream& is, std::string model_tag = "") {
    Path p;
    p.model_tag = std::move(model_tag);
    std::vector<double> times;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(is, line)) {
        ++line_no;
        if (line.empty()) continue;
        if (line_no == 1 && line.find_first_not_of("0123456789+-.eE, \t\r") != std::string::npos)
            continue;  // header
        const auto comma = line.find(',');
        if (comma == std::string::npos)
            throw CsvError("line " + std::to_string(line_no) + ": expected 't,x'");
        errno = 0;
        char* end = nullptr;
        const double t = std::strtod(line.c_str(), &end);
        const double x = std::strtod(line.c_str() + comma + 1, &end);
        if (!std::isfinite(t) || !std::isfinite(x))
            throw CsvError("line " + std::to_string(line_no) + ": non-finite value");
        times.push_back(t);
        p.values.push_back(x);
    }
    if (p.values.size() < 2) throw CsvError("path needs at least two rows");
    p.t0 = times.front();
    const std::size_t n = times.size() - 1;
    p.dt = (times.back() - times.front()) / static_cast<double>(n);
    if (!(p.dt > 0.0)) throw CsvError("time column must be strictly increasing");
    for (std::size_t i = 0; i < times.size(); ++i) {
        const double expected = p.t0 + static_cast<double>(i) * p.dt;
        if (std::fabs(times[i] - expected) > 1e-6 * std::fmax(1.0, std::fabs(expected)))
            throw CsvError("time column is not uniformly spaced (row " + std::to_string(i + 1) +
                           ")");
    }
    return p;
}

inline Path read_path_csv_file(const std::string& file) {
    std::ifstream is(file);
    if (!is) throw CsvError("cannot open '" + file + "' for reading");
    return read_path_csv(is, file);
}

inline void write_step_process_csv(std::ostream& os, const StepProcess& sp) {
    os << "x,value\n";
    for (std::size_t k = 0; k < sp.jump_points.size(); ++k)
        os << format_double(sp.jump_points[k]) << ',' << format_double(sp.values[k]) << '\n';
}

}  // namespace driftgof
