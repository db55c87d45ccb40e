#pragma once

#include <span>
#include <string>
#include <vector>

namespace distreg {

// i.i.d. pairs (X_i, Y_i) with declared ambient dimensions.
struct Dataset {
    int x_dim = 0;
    int y_dim = 0;
    std::vector<double> xs; // row-major, size() * x_dim
    std::vector<double> ys; // row-major, size() * y_dim

    std::size_t size() const { return x_dim == 0 ? 0 : xs.size() / static_cast<std::size_t>(x_dim); }

    std::span<const double> x(std::size_t i) const {
        return {xs.data() + i * static_cast<std::size_t>(x_dim), static_cast<std::size_t>(x_dim)};
    }
    std::span<const double> y(std::size_t i) const {
        return {ys.data() + i * static_cast<std::size_t>(y_dim), static_cast<std::size_t>(y_dim)};
    }

    void push_back(std::span<const double> xi, std::span<const double> yi) {
        xs.insert(xs.end(), xi.begin(), xi.end());
        ys.insert(ys.end(), yi.begin(), yi.end());
    }

    // first floor(n/2) rows / remaining rows
    Dataset head_half() const;
    Dataset tail_half() const;
};

// CSV with header x_1..x_DX,y_1..y_DY, one sample per row, full double precision.
void write_csv(const Dataset& data, const std::string& path);
Dataset read_csv(const std::string& path);

// point clouds as CSV (one point per row, no header requirement on read)
void write_cloud_csv(const std::vector<std::vector<double>>& cloud, const std::string& path);
std::vector<std::vector<double>> read_cloud_csv(const std::string& path);

} // namespace distreg
