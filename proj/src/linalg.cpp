#include "distreg/linalg.hpp"

namespace distreg::linalg {

Vec min_norm_lsq(const Mat& A, const Vec& b) {
    if (A.rows() == 0 || A.cols() == 0) return Vec::Zero(A.cols());
    Eigen::JacobiSVD<Mat> svd(A, Eigen::ComputeThinU | Eigen::ComputeThinV);
    svd.setThreshold(1e-12);
    return svd.solve(b);
}

namespace {

Vec clip(Vec x, double cap) {
    if (cap > 0)
        for (int i = 0; i < x.size(); ++i) x[i] = std::max(-cap, std::min(cap, x[i]));
    return x;
}

Vec clip_each(Vec x, const Vec& caps) {
    for (int i = 0; i < x.size(); ++i) x[i] = std::max(-caps[i], std::min(caps[i], x[i]));
    return x;
}

Vec projected_iterations_each(const Mat& G, const Vec& g, Vec x, const Vec& caps,
                              int max_iter, double rel_tol) {
    Vec r = g - G * x;
    double prev = 0.5 * x.dot(G * x) - g.dot(x);
    for (int it = 0; it < max_iter; ++it) {
        for (int i = 0; i < x.size(); ++i) {
            double gii = G(i, i);
            if (gii <= 0) continue;
            double xi = x[i] + (r[i]) / gii;
            xi = std::max(-caps[i], std::min(caps[i], xi));
            double delta = xi - x[i];
            if (delta != 0.0) {
                r -= delta * G.col(i);
                x[i] = xi;
            }
        }
        double obj = 0.5 * x.dot(G * x) - g.dot(x);
        if (std::abs(prev - obj) <= rel_tol * (std::abs(prev) + 1e-300)) break;
        prev = obj;
    }
    return x;
}

// projected Gauss-Seidel sweeps on the normal equations: each coordinate is
// minimized exactly, then clipped into its box
Vec projected_iterations(const Mat& G, const Vec& g, Vec x, double cap,
                         int max_iter, double rel_tol) {
    Vec r = g - G * x;
    double prev = 0.5 * x.dot(G * x) - g.dot(x);
    for (int it = 0; it < max_iter; ++it) {
        for (int i = 0; i < x.size(); ++i) {
            double gii = G(i, i);
            if (gii <= 0) continue;
            double xi = x[i] + (r[i]) / gii;
            if (cap > 0) xi = std::max(-cap, std::min(cap, xi));
            double delta = xi - x[i];
            if (delta != 0.0) {
                r -= delta * G.col(i);
                x[i] = xi;
            }
        }
        double obj = 0.5 * x.dot(G * x) - g.dot(x);
        if (std::abs(prev - obj) <= rel_tol * (std::abs(prev) + 1e-300)) break;
        prev = obj;
    }
    return x;
}

} // namespace

Vec box_constrained_lsq(const Mat& A, const Vec& b, double cap, int max_iter, double rel_tol) {
    Vec x = min_norm_lsq(A, b);
    if (cap <= 0 || x.lpNorm<Eigen::Infinity>() <= cap) return x;
    Mat G = A.transpose() * A;
    Vec g = A.transpose() * b;
    return projected_iterations(G, g, clip(x, cap), cap, max_iter, rel_tol);
}

Vec box_constrained_lsq_normal(const Mat& G, const Vec& g, double cap, int max_iter, double rel_tol) {
    Mat Greg = G;
    double ridge = 1e-12 * (G.trace() / std::max<int>(1, G.rows()) + 1.0);
    for (int i = 0; i < Greg.rows(); ++i) Greg(i, i) += ridge;
    Vec x = Greg.ldlt().solve(g);
    if (cap <= 0 || x.lpNorm<Eigen::Infinity>() <= cap) return x;
    return projected_iterations(G, g, clip(x, cap), cap, max_iter, rel_tol);
}

Vec box_constrained_lsq(const Mat& A, const Vec& b, const Vec& caps, int max_iter, double rel_tol) {
    Vec x = min_norm_lsq(A, b);
    bool inside = true;
    for (int i = 0; i < x.size() && inside; ++i) inside = std::abs(x[i]) <= caps[i];
    if (inside) return x;
    Mat G = A.transpose() * A;
    Vec g = A.transpose() * b;
    return projected_iterations_each(G, g, clip_each(x, caps), caps, max_iter, rel_tol);
}

Mat principal_frame(const std::vector<std::vector<double>>& rows,
                    std::span<const double> center, int d) {
    const int D = static_cast<int>(center.size());
    Mat cov = Mat::Zero(D, D);
    for (const auto& r : rows) {
        Vec u(D);
        for (int i = 0; i < D; ++i) u[i] = r[static_cast<std::size_t>(i)] - center[static_cast<std::size_t>(i)];
        cov += u * u.transpose();
    }
    Eigen::SelfAdjointEigenSolver<Mat> es(cov);
    Mat frame(D, d);
    for (int c = 0; c < d; ++c) frame.col(c) = es.eigenvectors().col(D - 1 - c);
    return frame;
}

Mat polar_orthonormal(const Mat& M) {
    Eigen::JacobiSVD<Mat> svd(M, Eigen::ComputeThinU | Eigen::ComputeThinV);
    return svd.matrixU() * svd.matrixV().transpose();
}

} // namespace distreg::linalg
