#include "distreg/ipm.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>

namespace distreg::ipm {

void DiscreteMeasure::validate() const {
    if (points.size() != weights.size())
        throw std::invalid_argument("measure: points/weights size mismatch");
    double s = 0.0;
    for (double w : weights) {
        if (w < 0.0) throw std::invalid_argument("measure: negative weight");
        s += w;
    }
    if (std::abs(s - 1.0) > 1e-12) throw std::invalid_argument("measure: weights must sum to 1");
}

wavelet::CoeffMap empirical_coefficients(const DiscreteMeasure& mu, const wavelet::Basis& basis,
                                         int J, double radius) {
    const int d = mu.dim();
    const int w = static_cast<int>(basis.support_length());
    wavelet::CoeffMap out;
    std::vector<int> k(static_cast<std::size_t>(d));
    std::vector<int> klo(static_cast<std::size_t>(d)), khi(static_cast<std::size_t>(d));
    for (int j = 0; j <= J; ++j) {
        const double s = std::ldexp(1.0, std::max(j - 1, 0));
        std::vector<unsigned> types;
        if (j == 0) types.push_back(0u);
        else
            for (unsigned g = 1; g < (1u << d); ++g) types.push_back(g);
        for (std::size_t i = 0; i < mu.points.size(); ++i) {
            const auto& p = mu.points[i];
            bool in_range = true;
            for (int a = 0; a < d; ++a) {
                double u = s * p[static_cast<std::size_t>(a)];
                klo[static_cast<std::size_t>(a)] = static_cast<int>(std::ceil(u)) - w;
                khi[static_cast<std::size_t>(a)] = static_cast<int>(std::floor(u));
                if (klo[static_cast<std::size_t>(a)] > khi[static_cast<std::size_t>(a)]) in_range = false;
            }
            if (!in_range) continue;
            k = klo;
            while (true) {
                wavelet::Index idx;
                idx.level = j;
                idx.shift = k;
                for (unsigned g : types) {
                    idx.type = g;
                    double v = wavelet::evaluate(basis, idx, p);
                    if (v != 0.0) out[idx] += mu.weights[i] * v;
                }
                int axis = 0;
                while (axis < d) {
                    std::size_t ai = static_cast<std::size_t>(axis);
                    if (++k[ai] <= khi[ai]) break;
                    k[ai] = klo[ai];
                    ++axis;
                }
                if (axis == d) break;
            }
        }
    }
    // keep only indices whose support meets the ball
    for (auto it = out.begin(); it != out.end();) {
        if (!wavelet::rect_intersects_ball(wavelet::support_rect(basis, it->first), radius))
            it = out.erase(it);
        else
            ++it;
    }
    return out;
}

double besov_ipm_maps(const wavelet::CoeffMap& a, const wavelet::CoeffMap& b, double gamma,
                      int J, int dim) {
    double total = 0.0;
    auto weight = [&](int j) { return std::pow(2.0, -j * gamma - 0.5 * j * dim); };
    for (const auto& [idx, va] : a) {
        if (idx.level > J) continue;
        auto it = b.find(idx);
        double vb = (it == b.end()) ? 0.0 : it->second;
        total += weight(idx.level) * std::abs(va - vb);
    }
    for (const auto& [idx, vb] : b) {
        if (idx.level > J) continue;
        if (a.find(idx) == a.end()) total += weight(idx.level) * std::abs(vb);
    }
    return total;
}

double besov_ipm(const DiscreteMeasure& mu, const DiscreteMeasure& nu, double gamma, int J,
                 const wavelet::Basis& basis, double radius) {
    if (gamma < 0.0) throw std::invalid_argument("besov_ipm: gamma must be >= 0");
    if (gamma > static_cast<double>(basis.regularity()))
        throw std::invalid_argument("besov_ipm: gamma exceeds basis regularity");
    mu.validate();
    nu.validate();
    if (mu.dim() != nu.dim()) throw std::invalid_argument("besov_ipm: dimension mismatch");
    auto ca = empirical_coefficients(mu, basis, J, radius);
    auto cb = empirical_coefficients(nu, basis, J, radius);
    return besov_ipm_maps(ca, cb, gamma, J, mu.dim());
}

namespace {

// concave piecewise-linear function on [lo, hi] given by breakpoints
struct ConcavePL {
    std::vector<double> xs, ys;

    double max_value() const {
        double m = ys[0];
        for (double y : ys) m = std::max(m, y);
        return m;
    }
    std::size_t argmax() const {
        std::size_t best = 0;
        for (std::size_t i = 1; i < ys.size(); ++i)
            if (ys[i] > ys[best]) best = i;
        return best;
    }
    double eval(double x) const {
        if (x <= xs.front()) return ys.front();
        if (x >= xs.back()) return ys.back();
        auto it = std::upper_bound(xs.begin(), xs.end(), x);
        std::size_t i = static_cast<std::size_t>(it - xs.begin());
        double t = (x - xs[i - 1]) / (xs[i] - xs[i - 1]);
        return ys[i - 1] * (1 - t) + ys[i] * t;
    }
};

// W(f) = max over f' in [f-delta, f+delta] of V(f'), restricted to [-M, M]
ConcavePL slide_max(const ConcavePL& V, double delta, double M) {
    std::size_t star = V.argmax();
    ConcavePL W;
    for (std::size_t i = 0; i <= star; ++i) {
        W.xs.push_back(V.xs[i] - delta);
        W.ys.push_back(V.ys[i]);
    }
    // plateau
    W.xs.push_back(V.xs[star] + delta);
    W.ys.push_back(V.ys[star]);
    for (std::size_t i = star + 1; i < V.xs.size(); ++i) {
        W.xs.push_back(V.xs[i] + delta);
        W.ys.push_back(V.ys[i]);
    }
    // clip domain to [-M, M]
    ConcavePL out;
    out.xs.push_back(-M);
    out.ys.push_back(W.eval(-M));
    for (std::size_t i = 0; i < W.xs.size(); ++i) {
        if (W.xs[i] > -M + 1e-15 && W.xs[i] < M - 1e-15) {
            out.xs.push_back(W.xs[i]);
            out.ys.push_back(W.ys[i]);
        }
    }
    out.xs.push_back(M);
    out.ys.push_back(W.eval(M));
    return out;
}

} // namespace

double brute_force_ipm(const DiscreteMeasure& mu, const DiscreteMeasure& nu, int gamma,
                       int grid_nodes) {
    mu.validate();
    nu.validate();
    if (mu.dim() != 1 || nu.dim() != 1)
        throw std::invalid_argument("brute_force_ipm: only one-dimensional measures supported");
    if (gamma != 0 && gamma != 1)
        throw std::invalid_argument("brute_force_ipm: unsupported gamma (oracle handles 0 and 1)");

    if (gamma == 0) {
        std::map<double, double> signed_mass;
        for (std::size_t i = 0; i < mu.points.size(); ++i) signed_mass[mu.points[i][0]] += mu.weights[i];
        for (std::size_t i = 0; i < nu.points.size(); ++i) signed_mass[nu.points[i][0]] -= nu.weights[i];
        double s = 0.0;
        for (const auto& [p, m] : signed_mass) s += std::abs(m);
        return s;
    }

    double lo = 1e300, hi = -1e300;
    for (const auto& p : mu.points) {
        lo = std::min(lo, p[0]);
        hi = std::max(hi, p[0]);
    }
    for (const auto& p : nu.points) {
        lo = std::min(lo, p[0]);
        hi = std::max(hi, p[0]);
    }
    double pad = 0.1 * std::max(hi - lo, 1e-12);
    lo -= pad;
    hi += pad;
    const int G = std::max(grid_nodes, 2);
    const double step = (hi - lo) / (G - 1);

    std::vector<double> c(static_cast<std::size_t>(G), 0.0);
    auto snap = [&](double x) {
        long g = std::lround((x - lo) / step);
        return static_cast<std::size_t>(std::clamp<long>(g, 0, G - 1));
    };
    for (std::size_t i = 0; i < mu.points.size(); ++i) c[snap(mu.points[i][0])] += mu.weights[i];
    for (std::size_t i = 0; i < nu.points.size(); ++i) c[snap(nu.points[i][0])] -= nu.weights[i];

    const double M = 0.5;          // sup-norm budget
    const double delta = 0.5 * step; // Lipschitz budget per grid step

    ConcavePL V;
    V.xs = {-M, M};
    double clast = c[static_cast<std::size_t>(G - 1)];
    V.ys = {-M * clast, M * clast};
    for (int g = G - 2; g >= 0; --g) {
        ConcavePL W = slide_max(V, delta, M);
        for (std::size_t i = 0; i < W.xs.size(); ++i) W.ys[i] += c[static_cast<std::size_t>(g)] * W.xs[i];
        V = std::move(W);
    }
    return V.max_value();
}

double expected_conditional_ipm(const ConditionalCoeffs& estimator, const ConditionalCoeffs& truth,
                                const std::vector<std::vector<double>>& x_samples, double gamma,
                                int J, int dim) {
    if (x_samples.empty()) throw std::invalid_argument("expected_conditional_ipm: no covariate samples");
    double total = 0.0;
    for (const auto& x : x_samples)
        total += besov_ipm_maps(estimator(x), truth(x), gamma, J, dim);
    return total / static_cast<double>(x_samples.size());
}

} // namespace distreg::ipm
