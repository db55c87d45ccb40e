#include "distreg/wavelet.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <complex>
#include <fstream>
#include <limits>
#include <mutex>
#include <sstream>
#include <stdexcept>

namespace distreg::wavelet {

namespace {

constexpr double kSqrt2 = 1.4142135623730950488016887242097;

std::vector<double> poly_mul(const std::vector<double>& a, const std::vector<double>& b) {
    std::vector<double> out(a.size() + b.size() - 1, 0.0);
    for (std::size_t i = 0; i < a.size(); ++i)
        for (std::size_t j = 0; j < b.size(); ++j) out[i + j] += a[i] * b[j];
    return out;
}

// roots of a complex-coefficient polynomial, Durand-Kerner
std::vector<std::complex<double>> poly_roots(std::vector<double> coeffs) {
    using cd = std::complex<double>;
    while (coeffs.size() > 1 && std::abs(coeffs.back()) < 1e-300) coeffs.pop_back();
    const int deg = static_cast<int>(coeffs.size()) - 1;
    std::vector<cd> c(coeffs.begin(), coeffs.end());
    for (auto& v : c) v /= coeffs.back();
    std::vector<cd> r(deg);
    cd seed(0.4, 0.9);
    cd acc(1.0, 0.0);
    for (int i = 0; i < deg; ++i) {
        acc *= seed;
        r[i] = acc;
    }
    for (int it = 0; it < 600; ++it) {
        double worst = 0.0;
        for (int i = 0; i < deg; ++i) {
            cd num(1.0, 0.0);
            cd x = r[i];
            // Horner for monic polynomial value
            cd val = c[deg];
            for (int k = deg - 1; k >= 0; --k) val = val * x + c[k];
            cd den(1.0, 0.0);
            for (int j = 0; j < deg; ++j)
                if (j != i) den *= (x - r[j]);
            cd delta = val / den;
            r[i] -= delta;
            worst = std::max(worst, std::abs(delta));
            (void)num;
        }
        if (worst < 1e-14) break;
    }
    return r;
}

std::vector<double> make_daubechies(int p) {
    // Q(z) = z^{p-1} P(y(z)) with y = -(z-1)^2/(4z); roots in reciprocal pairs
    std::vector<double> Q(2 * static_cast<std::size_t>(p) - 1, 0.0);
    double binom = 1.0;
    for (int k = 0; k < p; ++k) {
        if (k > 0) binom = binom * (p - 1 + k) / k;
        std::vector<double> term{1.0};
        std::vector<double> zm1{-1.0, 1.0};
        for (int t = 0; t < 2 * k; ++t) term = poly_mul(term, zm1);
        double scale = binom * ((k % 2) ? -1.0 : 1.0) / std::pow(4.0, k);
        int shift = p - 1 - k;
        for (std::size_t i = 0; i < term.size(); ++i) Q[i + static_cast<std::size_t>(shift)] += scale * term[i];
    }
    std::vector<std::complex<double>> low;
    if (p > 1) {
        auto roots = poly_roots(Q);
        for (const auto& r : roots)
            if (std::abs(r) < 1.0) low.push_back(r);
        if (static_cast<int>(low.size()) != p - 1)
            throw std::runtime_error("daubechies factorization failed");
    }
    // ((1+z)/2)^p * prod (z - r_i), taken real, normalized to sum sqrt(2)
    std::vector<std::complex<double>> h{1.0};
    for (int t = 0; t < p; ++t) {
        std::vector<std::complex<double>> next(h.size() + 1, 0.0);
        for (std::size_t i = 0; i < h.size(); ++i) {
            next[i] += 0.5 * h[i];
            next[i + 1] += 0.5 * h[i];
        }
        h = std::move(next);
    }
    for (const auto& r : low) {
        std::vector<std::complex<double>> next(h.size() + 1, 0.0);
        for (std::size_t i = 0; i < h.size(); ++i) {
            next[i] += -r * h[i];
            next[i + 1] += h[i];
        }
        h = std::move(next);
    }
    std::vector<double> taps(h.size());
    double sum = 0.0;
    for (std::size_t i = 0; i < h.size(); ++i) {
        taps[i] = h[i].real();
        sum += taps[i];
    }
    for (auto& v : taps) v *= kSqrt2 / sum;
    // canonical minimum-phase orientation: energy concentrated early
    double m1 = 0.0, m2 = 0.0;
    for (std::size_t i = 0; i < taps.size(); ++i) {
        m1 += static_cast<double>(i) * taps[i] * taps[i];
        m2 += static_cast<double>(taps.size() - 1 - i) * taps[i] * taps[i];
    }
    if (m2 < m1) std::reverse(taps.begin(), taps.end());
    // double-shift orthonormality sanity check
    for (std::size_t m = 1; 2 * m < taps.size(); ++m) {
        double dot = 0.0;
        for (std::size_t k = 0; k + 2 * m < taps.size(); ++k) dot += taps[k] * taps[k + 2 * m];
        if (std::abs(dot) > 1e-9) throw std::runtime_error("filter failed orthonormality check");
    }
    return taps;
}

} // namespace

const std::vector<double>& daubechies_filter(int order) {
    if (order < 2 || order > 10)
        throw std::invalid_argument("daubechies order must be in [2,10], got " + std::to_string(order));
    static std::vector<double> cache[11];
    static std::mutex mu;
    std::lock_guard<std::mutex> lock(mu);
    if (cache[order].empty()) cache[order] = make_daubechies(order);
    return cache[order];
}

std::vector<double> load_filter(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open filter file: " + path);
    std::vector<double> taps;
    std::string line;
    while (std::getline(in, line)) {
        auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        std::stringstream ss(line);
        double v;
        if (ss >> v) taps.push_back(v);
    }
    if (taps.size() < 4 || taps.size() % 2 != 0)
        throw std::runtime_error("filter file must hold an even number (>= 4) of taps");
    return taps;
}

Basis Basis::build(const BasisConfig& cfg) {
    if (cfg.order < 2) throw std::invalid_argument("basis order must be >= 2");
    if (cfg.resolution < 10) throw std::invalid_argument("basis resolution must be >= 10");
    std::vector<double> taps =
        cfg.filter_file.empty() ? daubechies_filter(cfg.order) : load_filter(cfg.filter_file);
    Basis b = build_from_filter(std::move(taps), cfg.regularity, cfg.resolution);
    b.order_ = cfg.order;
    return b;
}

Basis Basis::build_from_filter(std::vector<double> taps, int regularity, int resolution) {
    Basis b;
    b.order_ = static_cast<int>(taps.size()) / 2;
    b.regularity_ = regularity;
    b.resolution_ = resolution;
    b.filter_ = std::move(taps);

    const int N = static_cast<int>(b.filter_.size());
    const std::int64_t cells = static_cast<std::int64_t>(N - 1) << resolution;
    const std::size_t len = static_cast<std::size_t>(cells) + 1;
    const double h = std::ldexp(1.0, -resolution);

    // cascade fixed point of phi(x) = sqrt(2) sum_k h_k phi(2x - k), hat start
    std::vector<double> phi(len), next(len);
    for (std::size_t i = 0; i < len; ++i) {
        double x = static_cast<double>(i) * h;
        phi[i] = std::max(0.0, 1.0 - std::abs(x - 1.0));
    }
    auto iterate = [&](std::vector<double>& cur, std::vector<double>& out, double mask_scale) {
        for (std::size_t i = 0; i < len; ++i) {
            double acc = 0.0;
            std::int64_t base = 2 * static_cast<std::int64_t>(i);
            for (int k = 0; k < N; ++k) {
                std::int64_t j = base - (static_cast<std::int64_t>(k) << resolution);
                if (j >= 0 && j <= cells) acc += b.filter_[static_cast<std::size_t>(k)] * cur[static_cast<std::size_t>(j)];
            }
            out[i] = mask_scale * acc;
        }
    };
    for (int it = 0; it < 160; ++it) {
        iterate(phi, next, kSqrt2);
        double diff = 0.0;
        for (std::size_t i = 0; i < len; ++i) diff = std::max(diff, std::abs(next[i] - phi[i]));
        phi.swap(next);
        if (diff < 1e-13) break;
    }
    b.phi_.push_back(phi);

    // Derivative tables by filtering the derivative two-scale relation
    // phi^{(m)}(x) = 2^m sqrt(2) sum_k h_k phi^{(m)}(2x - k): values at the
    // interior integers solve (T_m - I)v = 0, finer dyadic nodes follow by
    // one refinement sweep per depth.
    for (int m = 1; m <= regularity; ++m) {
        const double mask = std::ldexp(kSqrt2, m);
        const int interior = N - 2;
        Eigen::MatrixXd T = Eigen::MatrixXd::Zero(interior, interior);
        for (int i = 1; i <= interior; ++i)
            for (int j = 1; j <= interior; ++j) {
                int k = 2 * i - j;
                if (k >= 0 && k < N) T(i - 1, j - 1) = mask * b.filter_[static_cast<std::size_t>(k)];
            }
        Eigen::JacobiSVD<Eigen::MatrixXd> svd(T - Eigen::MatrixXd::Identity(interior, interior),
                                              Eigen::ComputeFullV);
        if (svd.singularValues()(interior - 1) > 1e-6)
            throw std::runtime_error("requested regularity exceeds what this filter supports (derivative order " +
                                     std::to_string(m) + ")");
        Eigen::VectorXd v = svd.matrixV().col(interior - 1);

        std::vector<double> der(len, 0.0);
        for (int i = 1; i <= interior; ++i) der[static_cast<std::size_t>(i) << resolution] = v(i - 1);
        for (int depth = 1; depth <= resolution; ++depth) {
            std::int64_t stride = static_cast<std::int64_t>(1) << (resolution - depth);
            for (std::int64_t i = stride; i <= cells; i += 2 * stride) {
                double acc = 0.0;
                std::int64_t base = 2 * i;
                for (int k = 0; k < N; ++k) {
                    std::int64_t j = base - (static_cast<std::int64_t>(k) << resolution);
                    if (j >= 0 && j <= cells) acc += b.filter_[static_cast<std::size_t>(k)] * der[static_cast<std::size_t>(j)];
                }
                der[static_cast<std::size_t>(i)] = mask * acc;
            }
        }
        // normalization: for m=1 the exact moment identity 1 = sum_j (c - j) phi'(j)
        // with c = (sqrt(2)/2) sum_k k h_k; for m>1, grid quadrature of
        // x^m phi^{(m)} = (-1)^m m!
        double scale_fix;
        if (m == 1) {
            double c = 0.0;
            for (int k = 0; k < N; ++k) c += k * b.filter_[static_cast<std::size_t>(k)];
            c *= kSqrt2 / 2.0;
            double s = 0.0;
            for (int j = 1; j <= interior; ++j) s += (c - j) * der[static_cast<std::size_t>(j) << resolution];
            if (std::abs(s) < 1e-12) throw std::runtime_error("degenerate derivative normalization");
            scale_fix = 1.0 / s;
        } else {
            double target = 1.0;
            for (int t = 2; t <= m; ++t) target *= t;
            if (m % 2) target = -target;
            double s = 0.0;
            for (std::size_t i = 0; i < len; ++i)
                s += std::pow(static_cast<double>(i) * h, m) * der[i] * h;
            if (std::abs(s) < 1e-12) throw std::runtime_error("degenerate derivative normalization");
            scale_fix = target / s;
        }
        for (auto& vv : der) vv *= scale_fix;
        // consistency gate: integrating the new table must recover the previous one
        {
            const auto& prev = b.phi_.back();
            double acc = 0.0, worst = 0.0, sup_prev = 0.0;
            for (std::size_t i = 0; i < len; ++i) sup_prev = std::max(sup_prev, std::abs(prev[i]));
            for (std::size_t i = 1; i < len; ++i) {
                acc += 0.5 * (der[i - 1] + der[i]) * h;
                worst = std::max(worst, std::abs(acc - prev[i]));
            }
            if (!(worst <= 0.25 * (sup_prev + 1e-12)))
                throw std::runtime_error("requested regularity exceeds what this filter supports (derivative order " +
                                         std::to_string(m) + ")");
        }
        b.phi_.push_back(std::move(der));
    }

    // mother wavelet and derivatives by the alternating-flip relation
    std::vector<double> g(static_cast<std::size_t>(N));
    for (int k = 0; k < N; ++k)
        g[static_cast<std::size_t>(k)] = ((k % 2) ? -1.0 : 1.0) * b.filter_[static_cast<std::size_t>(N - 1 - k)];
    for (int m = 0; m <= regularity; ++m) {
        const auto& src = b.phi_[static_cast<std::size_t>(m)];
        std::vector<double> psi(len, 0.0);
        double scale = std::ldexp(kSqrt2, m);
        for (std::size_t i = 0; i < len; ++i) {
            double acc = 0.0;
            std::int64_t base = 2 * static_cast<std::int64_t>(i);
            for (int k = 0; k < N; ++k) {
                std::int64_t j = base - (static_cast<std::int64_t>(k) << resolution);
                if (j >= 0 && j <= cells) acc += g[static_cast<std::size_t>(k)] * src[static_cast<std::size_t>(j)];
            }
            psi[i] = scale * acc;
        }
        b.psi_.push_back(std::move(psi));
    }
    return b;
}

double Basis::eval_table(const std::vector<std::vector<double>>& tab, double t, int deriv) const {
    if (deriv < 0 || deriv > regularity_)
        throw std::invalid_argument("derivative order " + std::to_string(deriv) +
                                    " exceeds declared regularity " + std::to_string(regularity_));
    const auto& values = tab[static_cast<std::size_t>(deriv)];
    double u = std::ldexp(t, resolution_);
    if (u <= 0.0 || u >= static_cast<double>(values.size() - 1)) return 0.0;
    double fl = std::floor(u);
    std::size_t i = static_cast<std::size_t>(fl);
    double frac = u - fl;
    return values[i] * (1.0 - frac) + values[i + 1] * frac;
}

double Basis::measured_sup(bool is_mother, int deriv) const {
    const auto& values = (is_mother ? psi_ : phi_)[static_cast<std::size_t>(deriv)];
    double m = 0.0;
    for (double v : values) m = std::max(m, std::abs(v));
    return m;
}

double Basis::grid_integral(bool is_mother, const std::function<double(double)>& weight) const {
    const auto& values = (is_mother ? psi_ : phi_)[0];
    const double h = std::ldexp(1.0, -resolution_);
    double acc = 0.0;
    for (std::size_t i = 0; i < values.size(); ++i)
        acc += values[i] * weight(static_cast<double>(i) * h);
    return acc * h;
}

double scale_of(const Index& idx) { return std::ldexp(1.0, std::max(idx.level - 1, 0)); }

double prefactor(const Index& idx) {
    if (idx.level == 0) return 1.0;
    return std::pow(2.0, 0.5 * static_cast<double>(idx.dim() * (idx.level - 1)));
}

double Rect::diameter() const {
    double s = 0.0;
    for (std::size_t i = 0; i < lo.size(); ++i) {
        double d = hi[i] - lo[i];
        s += d * d;
    }
    return std::sqrt(s);
}

Rect support_rect(const Basis& basis, const Index& idx) {
    Rect r;
    const double s = scale_of(idx);
    const double w = basis.support_length();
    for (int k : idx.shift) {
        r.lo.push_back(k / s);
        r.hi.push_back((k + w) / s);
    }
    return r;
}

bool rect_intersects_ball(const Rect& rect, double radius) {
    double d2 = 0.0;
    for (std::size_t i = 0; i < rect.lo.size(); ++i) {
        double d = 0.0;
        if (rect.lo[i] > 0.0) d = rect.lo[i];
        else if (rect.hi[i] < 0.0) d = -rect.hi[i];
        d2 += d * d;
    }
    return d2 <= radius * radius;
}

double evaluate(const Basis& basis, const Index& idx, std::span<const double> x) {
    const double s = scale_of(idx);
    double prod = prefactor(idx);
    for (int a = 0; a < idx.dim(); ++a) {
        bool mother = (idx.type >> a) & 1u;
        prod *= basis.factor(mother, s * x[static_cast<std::size_t>(a)] - idx.shift[static_cast<std::size_t>(a)]);
        if (prod == 0.0) return 0.0;
    }
    return prod;
}

double evaluate_partial(const Basis& basis, const Index& idx, std::span<const double> x, int axis) {
    const double s = scale_of(idx);
    double prod = prefactor(idx) * s;
    for (int a = 0; a < idx.dim(); ++a) {
        bool mother = (idx.type >> a) & 1u;
        double u = s * x[static_cast<std::size_t>(a)] - idx.shift[static_cast<std::size_t>(a)];
        prod *= basis.factor(mother, u, a == axis ? 1 : 0);
        if (prod == 0.0) return 0.0;
    }
    return prod;
}

double index_sup(const Basis& basis, const Index& idx) {
    double s = prefactor(idx);
    for (int a = 0; a < idx.dim(); ++a)
        s *= basis.measured_sup((idx.type >> a) & 1u);
    return s;
}

std::vector<Index> enumerate_indices(const Basis& basis, int level, int dim, double radius) {
    if (radius <= 0.0) throw std::invalid_argument("enumeration radius must be positive");
    const double s = std::ldexp(1.0, std::max(level - 1, 0));
    const int w = static_cast<int>(basis.support_length());
    const int kmin = static_cast<int>(std::ceil(-radius * s)) - w;
    const int kmax = static_cast<int>(std::floor(radius * s));
    std::vector<unsigned> types;
    if (level == 0) types.push_back(0u);
    else
        for (unsigned g = 1; g < (1u << dim); ++g) types.push_back(g);

    std::vector<Index> out;
    std::vector<int> k(static_cast<std::size_t>(dim), kmin);
    while (true) {
        Index idx;
        idx.level = level;
        idx.shift = k;
        idx.type = 0;
        if (dim == 1 || rect_intersects_ball(support_rect(basis, idx), radius)) {
            for (unsigned g : types) {
                idx.type = g;
                out.push_back(idx);
            }
        }
        int axis = 0;
        while (axis < dim) {
            if (++k[static_cast<std::size_t>(axis)] <= kmax) break;
            k[static_cast<std::size_t>(axis)] = kmin;
            ++axis;
        }
        if (axis == dim) break;
    }
    return out;
}

double empirical_coefficient(const Basis& basis, const Index& idx,
                             const std::vector<std::vector<double>>& points,
                             std::span<const double> weights) {
    double acc = 0.0;
    for (std::size_t i = 0; i < points.size(); ++i)
        acc += weights[i] * evaluate(basis, idx, points[i]);
    return acc;
}

double function_coefficient(const Basis& basis, const Index& idx,
                            const std::function<double(std::span<const double>)>& f,
                            int quad_depth) {
    const int d = idx.dim();
    const double s = scale_of(idx);
    const int w = static_cast<int>(basis.support_length());
    const std::int64_t per_axis = static_cast<std::int64_t>(w) << quad_depth;
    const double step = std::ldexp(1.0, -quad_depth);

    // per-axis factor values at midpoint nodes (argument space of the factor)
    std::vector<std::vector<double>> fac(static_cast<std::size_t>(d));
    for (int a = 0; a < d; ++a) {
        bool mother = (idx.type >> a) & 1u;
        auto& col = fac[static_cast<std::size_t>(a)];
        col.resize(static_cast<std::size_t>(per_axis));
        for (std::int64_t m = 0; m < per_axis; ++m)
            col[static_cast<std::size_t>(m)] = basis.factor(mother, (static_cast<double>(m) + 0.5) * step);
    }
    const double cell = std::pow(step / s, d);
    const double pref = prefactor(idx);

    std::vector<std::int64_t> m(static_cast<std::size_t>(d), 0);
    std::vector<double> x(static_cast<std::size_t>(d));
    double acc = 0.0;
    while (true) {
        double wprod = pref;
        for (int a = 0; a < d; ++a) {
            std::size_t ai = static_cast<std::size_t>(a);
            wprod *= fac[ai][static_cast<std::size_t>(m[ai])];
            x[ai] = (idx.shift[ai] + (static_cast<double>(m[ai]) + 0.5) * step) / s;
        }
        if (wprod != 0.0) acc += wprod * f(x);
        int axis = 0;
        while (axis < d) {
            if (++m[static_cast<std::size_t>(axis)] < per_axis) break;
            m[static_cast<std::size_t>(axis)] = 0;
            ++axis;
        }
        if (axis == d) break;
    }
    return acc * cell;
}

double inner_product(const Basis& basis, const Index& a, const Index& b) {
    if (a.dim() != b.dim()) throw std::invalid_argument("inner_product: dimension mismatch");
    const double sa = scale_of(a), sb = scale_of(b);
    const double w = basis.support_length();
    const double smax = std::max(sa, sb);
    const double h = std::ldexp(1.0, -basis.resolution()) / smax;
    double total = prefactor(a) * prefactor(b);
    for (int ax = 0; ax < a.dim() && total != 0.0; ++ax) {
        std::size_t ai = static_cast<std::size_t>(ax);
        double lo = std::max(a.shift[ai] / sa, b.shift[ai] / sb);
        double hi = std::min((a.shift[ai] + w) / sa, (b.shift[ai] + w) / sb);
        if (hi <= lo) return 0.0;
        bool ma = (a.type >> ax) & 1u, mb = (b.type >> ax) & 1u;
        std::int64_t cells = std::llround((hi - lo) / h);
        double acc = 0.0;
        for (std::int64_t m = 0; m < cells; ++m) {
            double x = lo + (static_cast<double>(m) + 0.5) * h;
            acc += basis.factor(ma, sa * x - a.shift[ai]) * basis.factor(mb, sb * x - b.shift[ai]);
        }
        total *= acc * h;
    }
    return total;
}

std::vector<double> index_embedding(const Basis& basis, const Index& idx, double radius) {
    const double s = scale_of(idx);
    const int w = static_cast<int>(basis.support_length());
    const int kmin = static_cast<int>(std::ceil(-radius * s)) - w;
    const int kmax = static_cast<int>(std::floor(radius * s));
    const double span = std::max(1, kmax - kmin);
    std::vector<double> out;
    out.reserve(idx.shift.size() + 1);
    for (int k : idx.shift) out.push_back(std::clamp((k - kmin) / span, 0.0, 1.0));
    if (idx.level == 0) {
        out.push_back(0.0);
    } else {
        const unsigned ntypes = (1u << idx.dim()) - 1u;
        out.push_back(ntypes <= 1 ? 0.0 : static_cast<double>(idx.type - 1u) / static_cast<double>(ntypes - 1u));
    }
    return out;
}

double truncated_reconstruction(const Basis& basis, const CoeffMap& coeffs, int level_cap,
                                std::span<const double> x) {
    double acc = 0.0;
    for (const auto& [idx, c] : coeffs) {
        if (idx.level > level_cap || c == 0.0) continue;
        acc += c * evaluate(basis, idx, x);
    }
    return acc;
}

} // namespace distreg::wavelet
