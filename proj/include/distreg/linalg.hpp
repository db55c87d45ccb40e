#pragma once

#include <Eigen/Dense>
#include <span>
#include <vector>

namespace distreg::linalg {

using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;

// minimum-norm least squares (pseudo-inverse convention for rank deficiency)
Vec min_norm_lsq(const Mat& A, const Vec& b);

// min ||Ax - b|| subject to |x_i| <= cap. Starts from the (clipped) minimum-norm
// solution, then runs projected normal-equation iterations: 50 steps or 1e-10
// relative objective change, whichever first. cap <= 0 means unconstrained.
Vec box_constrained_lsq(const Mat& A, const Vec& b, double cap,
                        int max_iter = 50, double rel_tol = 1e-10);

// same, from precomputed normal equations G = A^T A, g = A^T b
Vec box_constrained_lsq_normal(const Mat& G, const Vec& g, double cap,
                               int max_iter = 50, double rel_tol = 1e-10);

// per-coefficient box |x_i| <= caps_i
Vec box_constrained_lsq(const Mat& A, const Vec& b, const Vec& caps,
                        int max_iter = 50, double rel_tol = 1e-10);

// top-d eigenvectors of the covariance of row vectors centered at `center`
Mat principal_frame(const std::vector<std::vector<double>>& rows,
                    std::span<const double> center, int d);

// orthonormal factor of the polar decomposition (tall M, D x d, d <= D)
Mat polar_orthonormal(const Mat& M);

inline double sq_dist(std::span<const double> a, std::span<const double> b) {
    double s = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        double d = a[i] - b[i];
        s += d * d;
    }
    return s;
}

inline double dist(std::span<const double> a, std::span<const double> b) {
    return std::sqrt(sq_dist(a, b));
}

inline double norm(std::span<const double> a) {
    double s = 0;
    for (double v : a) s += v * v;
    return std::sqrt(s);
}

} // namespace distreg::linalg
