#include "distreg/smoothers.hpp"

#include "distreg/linalg.hpp"

#include <cmath>
#include <functional>
#include <stdexcept>

namespace distreg::smoothers {

double transition(double t) {
    double a = std::abs(t);
    if (a >= 2.0) return 0.0;
    if (a <= 1.0) return 1.0;
    double e = (3.0 - 2.0 * a) / ((a - 1.0) * (a - 2.0));
    return 1.0 / (1.0 + std::exp(e));
}

std::vector<double> partition_weights(std::span<const double> point, const PartitionWeights& pw) {
    if (pw.centers.empty()) throw std::invalid_argument("partition_weights: no centers");
    std::vector<double> w(pw.centers.size(), 0.0);
    double total = 0.0;
    double t2 = pw.scale * pw.scale;
    for (std::size_t k = 0; k < pw.centers.size(); ++k) {
        w[k] = transition(linalg::sq_dist(point, pw.centers[k]) / t2);
        total += w[k];
    }
    if (total <= 0.0) return w; // zero vector by convention
    for (auto& v : w) v /= total;
    return w;
}

std::vector<std::vector<int>> poly_powers(int dim, double degree_bound) {
    int max_total = static_cast<int>(std::ceil(degree_bound)) - 1;
    if (max_total < 0) max_total = 0;
    // |k| < degree_bound, strict
    while (max_total > 0 && !(static_cast<double>(max_total) < degree_bound)) --max_total;
    std::vector<std::vector<int>> out;
    std::vector<int> cur(static_cast<std::size_t>(dim), 0);
    std::function<void(int, int)> rec = [&](int axis, int remaining) {
        if (axis == dim) {
            out.push_back(cur);
            return;
        }
        for (int v = 0; v <= remaining; ++v) {
            cur[static_cast<std::size_t>(axis)] = v;
            rec(axis + 1, remaining - v);
        }
        cur[static_cast<std::size_t>(axis)] = 0;
    };
    rec(0, max_total);
    return out;
}

std::vector<std::vector<double>> greedy_packing(const std::vector<std::vector<double>>& pts,
                                                double min_sep, std::size_t max_count) {
    std::vector<std::vector<double>> chosen;
    if (pts.empty()) return chosen;
    chosen.push_back(pts[0]);
    std::vector<double> d2(pts.size());
    for (std::size_t i = 0; i < pts.size(); ++i) d2[i] = linalg::sq_dist(pts[i], pts[0]);
    while (max_count == 0 || chosen.size() < max_count) {
        std::size_t best = 0;
        for (std::size_t i = 1; i < pts.size(); ++i)
            if (d2[i] > d2[best]) best = i;
        if (d2[best] <= min_sep * min_sep) break;
        chosen.push_back(pts[best]);
        for (std::size_t i = 0; i < pts.size(); ++i)
            d2[i] = std::min(d2[i], linalg::sq_dist(pts[i], pts[best]));
    }
    return chosen;
}

namespace {

double power_term(std::span<const double> x, std::span<const double> center,
                  const std::vector<int>& k) {
    double p = 1.0;
    for (std::size_t a = 0; a < k.size(); ++a) {
        double d = x[a] - center[a];
        for (int t = 0; t < k[a]; ++t) p *= d;
    }
    return p;
}

} // namespace

double LocalPolyModel::eval(std::span<const double> x) const {
    double denom = floor_term;
    double numer = 0.0;
    const std::size_t P = powers.size();
    for (std::size_t i = 0; i < centers.size(); ++i) {
        double w = transition(linalg::dist(x, centers[i]) / bandwidth);
        if (w == 0.0) continue;
        denom += w;
        double poly = 0.0;
        for (std::size_t p = 0; p < P; ++p) poly += coef[i * P + p] * power_term(x, centers[i], powers[p]);
        numer += w * poly;
    }
    if (denom <= 0.0) return 0.0;
    return numer / denom;
}

bool LocalPolyModel::all_zero() const {
    for (double c : coef)
        if (c != 0.0) return false;
    return true;
}

LocalPolyDesign LocalPolyDesign::build(const std::vector<std::vector<double>>& covariates,
                                       std::vector<std::vector<double>> centers,
                                       double bandwidth, double degree_bound, double floor_term) {
    if (centers.empty()) throw std::invalid_argument("localpoly design needs at least one center");
    LocalPolyDesign d;
    d.centers = std::move(centers);
    d.bandwidth = bandwidth;
    d.floor_term = floor_term;
    d.powers = poly_powers(static_cast<int>(d.centers[0].size()), degree_bound);
    const std::size_t P = d.powers.size();
    const int cols = static_cast<int>(d.centers.size() * P);
    d.normal = Eigen::MatrixXd::Zero(cols, cols);
    d.rows.resize(covariates.size());
    std::vector<double> w(d.centers.size());
    for (std::size_t s = 0; s < covariates.size(); ++s) {
        std::span<const double> x(covariates[s]);
        double denom = floor_term;
        bool any = false;
        for (std::size_t i = 0; i < d.centers.size(); ++i) {
            w[i] = transition(linalg::dist(x, d.centers[i]) / bandwidth);
            denom += w[i];
            any = any || w[i] > 0.0;
        }
        if (!any || denom <= 0.0) continue;
        auto& row = d.rows[s];
        for (std::size_t i = 0; i < d.centers.size(); ++i) {
            if (w[i] == 0.0) continue;
            for (std::size_t p = 0; p < P; ++p) {
                double f = w[i] * power_term(x, d.centers[i], d.powers[p]) / denom;
                if (f != 0.0) row.emplace_back(static_cast<int>(i * P + p), f);
            }
        }
        for (const auto& [ca, va] : row)
            for (const auto& [cb, vb] : row) d.normal(ca, cb) += va * vb;
    }
    return d;
}

LocalPolyModel LocalPolyDesign::fit(std::span<const double> responses, double cap) const {
    const std::size_t P = powers.size();
    const int cols = static_cast<int>(centers.size() * P);
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(cols);
    for (std::size_t s = 0; s < rows.size(); ++s) {
        double r = responses[s];
        if (r == 0.0) continue;
        for (const auto& [c, v] : rows[s]) rhs(c) += r * v;
    }
    Eigen::VectorXd a = linalg::box_constrained_lsq_normal(normal, rhs, cap);
    LocalPolyModel m;
    m.centers = centers;
    m.powers = powers;
    m.bandwidth = bandwidth;
    m.floor_term = floor_term;
    m.cap = cap;
    m.coef.assign(a.data(), a.data() + a.size());
    return m;
}

LocalPolyModel localpoly_fit(const std::vector<std::vector<double>>& covariates,
                             std::span<const double> responses,
                             const std::vector<std::vector<double>>& centers,
                             double bandwidth, double degree_bound, double cap,
                             double floor_term) {
    if (covariates.empty()) throw std::invalid_argument("localpoly_fit: empty sample");
    if (covariates.size() != responses.size())
        throw std::invalid_argument("localpoly_fit: covariate/response size mismatch");
    auto design = LocalPolyDesign::build(covariates, centers, bandwidth, degree_bound, floor_term);
    return design.fit(responses, cap);
}

} // namespace distreg::smoothers
