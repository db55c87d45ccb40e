#include "distreg/dataset.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace distreg {

Dataset Dataset::head_half() const {
    Dataset out;
    out.x_dim = x_dim;
    out.y_dim = y_dim;
    std::size_t h = size() / 2;
    out.xs.assign(xs.begin(), xs.begin() + static_cast<long>(h * x_dim));
    out.ys.assign(ys.begin(), ys.begin() + static_cast<long>(h * y_dim));
    return out;
}

Dataset Dataset::tail_half() const {
    Dataset out;
    out.x_dim = x_dim;
    out.y_dim = y_dim;
    std::size_t h = size() / 2;
    out.xs.assign(xs.begin() + static_cast<long>(h * x_dim), xs.end());
    out.ys.assign(ys.begin() + static_cast<long>(h * y_dim), ys.end());
    return out;
}

namespace {

void append_num(std::string& line, double v, bool first) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), first ? "%.17g" : ",%.17g", v);
    line += buf;
}

std::vector<double> parse_row(const std::string& line) {
    std::vector<double> vals;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
        if (!cell.empty()) vals.push_back(std::stod(cell));
    }
    return vals;
}

} // namespace

void write_csv(const Dataset& data, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open for write: " + path);
    std::string header;
    for (int i = 1; i <= data.x_dim; ++i) header += (i == 1 ? "x_" : ",x_") + std::to_string(i);
    for (int i = 1; i <= data.y_dim; ++i) header += ",y_" + std::to_string(i);
    out << header << "\n";
    for (std::size_t r = 0; r < data.size(); ++r) {
        std::string line;
        auto xr = data.x(r);
        auto yr = data.y(r);
        for (std::size_t i = 0; i < xr.size(); ++i) append_num(line, xr[i], i == 0);
        for (double v : yr) append_num(line, v, false);
        out << line << "\n";
    }
}

Dataset read_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open for read: " + path);
    std::string line;
    if (!std::getline(in, line)) throw std::runtime_error("empty dataset file: " + path);
    int dx = 0, dy = 0;
    {
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) {
            if (cell.rfind("x_", 0) == 0) ++dx;
            else if (cell.rfind("y_", 0) == 0) ++dy;
        }
    }
    if (dx == 0 || dy == 0) throw std::runtime_error("malformed dataset header: " + path);
    Dataset data;
    data.x_dim = dx;
    data.y_dim = dy;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        auto vals = parse_row(line);
        if (static_cast<int>(vals.size()) != dx + dy)
            throw std::runtime_error("row width mismatch in " + path);
        data.xs.insert(data.xs.end(), vals.begin(), vals.begin() + dx);
        data.ys.insert(data.ys.end(), vals.begin() + dx, vals.end());
    }
    return data;
}

void write_cloud_csv(const std::vector<std::vector<double>>& cloud, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open for write: " + path);
    for (const auto& p : cloud) {
        std::string line;
        for (std::size_t i = 0; i < p.size(); ++i) append_num(line, p[i], i == 0);
        out << line << "\n";
    }
}

std::vector<std::vector<double>> read_cloud_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open for read: " + path);
    std::vector<std::vector<double>> cloud;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        if (line.find_first_of("0123456789") == std::string::npos) continue; // header-ish
        cloud.push_back(parse_row(line));
    }
    return cloud;
}

} // namespace distreg
