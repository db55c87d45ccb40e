#pragma once

#include <Eigen/Dense>
#include <span>
#include <vector>

namespace distreg::smoothers {

// smooth bridge: 1 on [-1,1], 0 outside (-2,2), infinitely differentiable
double transition(double t);

struct PartitionWeights {
    std::vector<std::vector<double>> centers;
    double scale = 1.0; // tau_2
};

// w_k = rho(||p - c_k||^2 / tau^2) / sum; the zero vector where all raw
// weights vanish
std::vector<double> partition_weights(std::span<const double> point, const PartitionWeights& pw);

// all multi-indices k in N_0^dim with |k| < degree_bound (strict)
std::vector<std::vector<int>> poly_powers(int dim, double degree_bound);

// deterministic farthest-point packing; stops at max_count (0 = unlimited) or
// when no remaining point is farther than min_sep from the chosen set
std::vector<std::vector<double>> greedy_packing(const std::vector<std::vector<double>>& pts,
                                                double min_sep, std::size_t max_count);

struct LocalPolyModel {
    std::vector<std::vector<double>> centers;
    std::vector<std::vector<int>> powers;
    std::vector<double> coef; // [center][power], row-major
    double bandwidth = 1.0;
    double floor_term = 0.0;
    double cap = 0.0;

    double eval(std::span<const double> x) const;
    bool all_zero() const;
};

// shared design for many response vectors over the same covariates/centers
struct LocalPolyDesign {
    std::vector<std::vector<double>> centers;
    std::vector<std::vector<int>> powers;
    double bandwidth = 1.0;
    double floor_term = 0.0;
    std::vector<std::vector<std::pair<int, double>>> rows; // sparse features per sample
    Eigen::MatrixXd normal;

    static LocalPolyDesign build(const std::vector<std::vector<double>>& covariates,
                                 std::vector<std::vector<double>> centers,
                                 double bandwidth, double degree_bound, double floor_term);
    LocalPolyModel fit(std::span<const double> responses, double cap) const;
};

// box-constrained least squares fit of the local polynomial family
LocalPolyModel localpoly_fit(const std::vector<std::vector<double>>& covariates,
                             std::span<const double> responses,
                             const std::vector<std::vector<double>>& centers,
                             double bandwidth, double degree_bound, double cap,
                             double floor_term);

} // namespace distreg::smoothers
