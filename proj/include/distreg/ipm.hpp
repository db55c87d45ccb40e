#pragma once

#include "distreg/wavelet.hpp"

#include <functional>
#include <span>
#include <vector>

namespace distreg::ipm {

struct DiscreteMeasure {
    std::vector<std::vector<double>> points;
    std::vector<double> weights;

    void validate() const; // nonnegative weights summing to 1 within 1e-12
    int dim() const { return points.empty() ? 0 : static_cast<int>(points[0].size()); }
};

// empirical wavelet coefficients of the measure, levels 0..J, indices whose
// support meets B(0, radius)
wavelet::CoeffMap empirical_coefficients(const DiscreteMeasure& mu, const wavelet::Basis& basis,
                                         int J, double radius);

// truncated Besov dual norm sum_{j<=J} 2^{-j gamma - j d/2} sum_psi |mu_psi - nu_psi|
double besov_ipm(const DiscreteMeasure& mu, const DiscreteMeasure& nu, double gamma, int J,
                 const wavelet::Basis& basis, double radius);

// same, on precomputed coefficient maps
double besov_ipm_maps(const wavelet::CoeffMap& a, const wavelet::CoeffMap& b, double gamma,
                      int J, int dim);

// One-dimensional linear-programming oracle for d_gamma, gamma in {0, 1}.
// gamma=0: total variation over the merged support. gamma=1: exact maximum of
// sum f(s_i)(mu_i - nu_i) over grid functions with |f| <= 1/2 and Lipschitz
// constant <= 1/2 (a fixed admissible split of the Holder budget), solved by
// dynamic programming over concave piecewise-linear value functions.
double brute_force_ipm(const DiscreteMeasure& mu, const DiscreteMeasure& nu, int gamma,
                       int grid_nodes = 512);

using ConditionalCoeffs = std::function<wavelet::CoeffMap(std::span<const double>)>;

// Monte-Carlo average of the Besov surrogate between two conditional
// coefficient maps over the supplied covariate draws
double expected_conditional_ipm(const ConditionalCoeffs& estimator, const ConditionalCoeffs& truth,
                                const std::vector<std::vector<double>>& x_samples, double gamma,
                                int J, int dim);

} // namespace distreg::ipm
