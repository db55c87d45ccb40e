#include "distreg/synthetic.hpp"

#include "distreg/linalg.hpp"
#include "distreg/rng.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <stdexcept>

namespace distreg::synthetic {

namespace {

constexpr double kPi = 3.14159265358979323846264338327950288;

// tabulated inverse CDF of an unnormalized density on [lo, hi]
struct InverseCdf {
    std::vector<double> grid, cdf;

    static InverseCdf build(double lo, double hi, int cells,
                            const std::function<double(double)>& density) {
        InverseCdf t;
        t.grid.resize(static_cast<std::size_t>(cells) + 1);
        t.cdf.resize(t.grid.size());
        double h = (hi - lo) / cells;
        double prev = density(lo);
        t.grid[0] = lo;
        t.cdf[0] = 0.0;
        for (int i = 1; i <= cells; ++i) {
            double x = lo + h * i;
            double cur = density(x);
            t.grid[static_cast<std::size_t>(i)] = x;
            t.cdf[static_cast<std::size_t>(i)] = t.cdf[static_cast<std::size_t>(i) - 1] + 0.5 * (prev + cur) * h;
            prev = cur;
        }
        double total = t.cdf.back();
        for (auto& v : t.cdf) v /= total;
        return t;
    }

    double total_mass(double lo, double hi, int cells,
                      const std::function<double(double)>& density) const {
        double h = (hi - lo) / cells, acc = 0, prev = density(lo);
        for (int i = 1; i <= cells; ++i) {
            double cur = density(lo + h * i);
            acc += 0.5 * (prev + cur) * h;
            prev = cur;
        }
        return acc;
    }

    double sample(double u) const {
        auto it = std::lower_bound(cdf.begin(), cdf.end(), u);
        if (it == cdf.begin()) return grid.front();
        if (it == cdf.end()) return grid.back();
        std::size_t i = static_cast<std::size_t>(it - cdf.begin());
        double c0 = cdf[i - 1], c1 = cdf[i];
        double t = (c1 > c0) ? (u - c0) / (c1 - c0) : 0.0;
        return grid[i - 1] * (1 - t) + grid[i] * t;
    }
};

double unit_sphere_area(int d) { // area of S^d in R^{d+1}
    return 2.0 * std::pow(kPi, 0.5 * (d + 1)) / std::tgamma(0.5 * (d + 1));
}

std::vector<double> gaussian_direction(Rng& rng, int d) {
    std::vector<double> u(static_cast<std::size_t>(d));
    double n2 = 0;
    do {
        n2 = 0;
        for (auto& v : u) {
            v = rng.normal();
            n2 += v * v;
        }
    } while (n2 < 1e-12);
    double inv = 1.0 / std::sqrt(n2);
    for (auto& v : u) v *= inv;
    return u;
}

} // namespace

double bump_k(double t, double beta) {
    if (t <= 0.0 || t >= 1.0) return 0.0;
    return std::pow(1.0 - t, beta + 1.0) * std::pow(t, beta + 1.0);
}

double bump_ktilde(double t, double s) {
    if (t <= 0.0 || t >= 1.0) return 0.0;
    return std::pow(1.0 - t, s + 1.0) * std::pow(t, s + 1.0) * (t - 0.5);
}

std::vector<double> sphere_chart(std::span<const double> z, int d_y, int D_y) {
    if (static_cast<int>(z.size()) != d_y) throw std::invalid_argument("sphere_chart: latent dim mismatch");
    if (D_y < d_y + 1) throw std::invalid_argument("sphere_chart: need D_y >= d_y + 1");
    double n2 = 0;
    for (double v : z) n2 += v * v;
    if (n2 > 1.0 + 1e-12) throw std::domain_error("sphere_chart: |z| > 1");
    std::vector<double> y(static_cast<std::size_t>(D_y), 0.0);
    for (int i = 0; i < d_y; ++i) y[static_cast<std::size_t>(i)] = z[static_cast<std::size_t>(i)];
    y[static_cast<std::size_t>(d_y)] = std::sqrt(std::max(0.0, 2.0 - n2));
    return y;
}

// ---------------------------------------------------------------------------

BumpDensityGenerator::BumpDensityGenerator(BumpDensityConfig cfg, std::vector<std::uint8_t> omega)
    : cfg_(cfg), omega_(std::move(omega)) {
    if (cfg_.D_X < cfg_.d_X) throw std::invalid_argument("bump generator: D_X < d_X");
    std::size_t need = 1;
    for (int i = 0; i < cfg_.D_Y; ++i) need *= static_cast<std::size_t>(cfg_.m1);
    for (int i = 0; i < cfg_.d_X; ++i) need *= static_cast<std::size_t>(cfg_.m2);
    if (omega_.size() != need) throw std::invalid_argument("bump generator: omega tensor size mismatch");

    smooth_s_ = std::max({cfg_.alpha_Y, cfg_.alpha_X, cfg_.gamma});
    base_a_ = std::max(cfg_.alpha_Y, cfg_.gamma);

    auto q_raw = [this](double t) {
        if (t < -1.0 || t > 1.0) return 0.0;
        return std::pow(1.0 - t, base_a_ + 1.0) * std::pow(1.0 + t, base_a_ + 1.0);
    };
    InverseCdf tab = InverseCdf::build(-1.0, 1.0, 4096, q_raw);
    axis_norm_ = tab.total_mass(-1.0, 1.0, 4096, q_raw);
    cdf_grid_ = tab.grid;
    cdf_val_ = tab.cdf;

    for (int i = 0; i <= 4096; ++i)
        sup_ktilde_ = std::max(sup_ktilde_, std::abs(bump_ktilde(i / 4096.0, smooth_s_)));

    // The paper's grid is asymptotic (m1 large), where every cell sits inside
    // the baseline support. At small m1 the outermost cells can protrude past
    // [-1,1] where the baseline vanishes; those cells stay inert so the
    // density remains nonnegative.
    const double c1 = cfg_.m1 * std::sqrt(0.5 * cfg_.D_Y);
    valid_cell_lo_ = cfg_.m1 + 1;
    valid_cell_hi_ = 0;
    double edge = 0.0;
    for (int cell = 1; cell <= cfg_.m1; ++cell) {
        double lo = (cell - 0.5 * cfg_.m1) / c1;
        double hi = (cell + 1.0 - 0.5 * cfg_.m1) / c1;
        if (lo <= -1.0 || hi >= 1.0) continue;
        valid_cell_lo_ = std::min(valid_cell_lo_, cell);
        valid_cell_hi_ = std::max(valid_cell_hi_, cell);
        edge = std::max({edge, std::abs(lo), std::abs(hi)});
    }
    double sup_bump = std::pow(sup_ktilde_, cfg_.D_Y + cfg_.d_X);
    double nominal = std::pow(static_cast<double>(cfg_.m1), -cfg_.alpha_Y);
    if (valid_cell_lo_ > valid_cell_hi_) {
        amplitude_ = 0.0;
        base_min_ = 0.0;
        envelope_ = 1.0;
    } else {
        base_min_ = std::pow(q_raw(edge) / axis_norm_, cfg_.D_Y);
        if (cfg_.amplitude_scale > 0.0) {
            amplitude_ = cfg_.amplitude_scale * nominal;
            if (amplitude_ * sup_bump >= base_min_)
                throw std::invalid_argument("bump generator: amplitude violates the positivity envelope");
        } else {
            amplitude_ = std::min(nominal, 0.95 * base_min_ / sup_bump);
            cfg_.amplitude_scale = amplitude_ / nominal;
        }
        envelope_ = 1.0 + amplitude_ * sup_bump / base_min_;
    }
}

BumpDensityGenerator BumpDensityGenerator::with_random_signs(const BumpDensityConfig& cfg,
                                                             std::uint64_t seed) {
    std::size_t need = 1;
    for (int i = 0; i < cfg.D_Y; ++i) need *= static_cast<std::size_t>(cfg.m1);
    for (int i = 0; i < cfg.d_X; ++i) need *= static_cast<std::size_t>(cfg.m2);
    Rng rng(seed, 0xb0b);
    std::vector<std::uint8_t> omega(need);
    for (auto& v : omega) v = static_cast<std::uint8_t>(rng.next_u64() & 1u);
    return BumpDensityGenerator(cfg, std::move(omega));
}

double BumpDensityGenerator::baseline(std::span<const double> y) const {
    double p = 1.0;
    for (double t : y) {
        if (t < -1.0 || t > 1.0) return 0.0;
        p *= std::pow(1.0 - t, base_a_ + 1.0) * std::pow(1.0 + t, base_a_ + 1.0) / axis_norm_;
    }
    return p;
}

std::pair<std::size_t, double> BumpDensityGenerator::active_covariate_cell(
    std::span<const double> x) const {
    const double c2 = cfg_.m2 * std::sqrt(2.0 * cfg_.d_X);
    std::size_t flat = 0;
    double fac = 1.0;
    for (int i = 0; i < cfg_.d_X; ++i) {
        double u = c2 * x[static_cast<std::size_t>(i)];
        int cell = static_cast<int>(std::floor(u));
        if (cell < 1 || cell > cfg_.m2) return {static_cast<std::size_t>(-1), 0.0};
        fac *= bump_ktilde(u - cell, smooth_s_);
        flat = flat * static_cast<std::size_t>(cfg_.m2) + static_cast<std::size_t>(cell - 1);
    }
    if (fac == 0.0) return {static_cast<std::size_t>(-1), 0.0};
    return {flat, fac};
}

double BumpDensityGenerator::bump_field(std::span<const double> y, std::span<const double> x) const {
    auto [xcell, xfac] = active_covariate_cell(x);
    if (xfac == 0.0) return 0.0;
    const double c1 = cfg_.m1 * std::sqrt(0.5 * cfg_.D_Y);
    std::size_t yflat = 0;
    double yfac = 1.0;
    for (int i = 0; i < cfg_.D_Y; ++i) {
        double u = c1 * y[static_cast<std::size_t>(i)] + 0.5 * cfg_.m1;
        int cell = static_cast<int>(std::floor(u));
        if (cell < valid_cell_lo_ || cell > valid_cell_hi_) return 0.0;
        yfac *= bump_ktilde(u - cell, smooth_s_);
        yflat = yflat * static_cast<std::size_t>(cfg_.m1) + static_cast<std::size_t>(cell - 1);
    }
    if (yfac == 0.0) return 0.0;
    std::size_t m2pow = 1;
    for (int i = 0; i < cfg_.d_X; ++i) m2pow *= static_cast<std::size_t>(cfg_.m2);
    std::size_t flat = yflat * m2pow + xcell;
    return omega_[flat] ? yfac * xfac : 0.0;
}

double BumpDensityGenerator::density(std::span<const double> y, std::span<const double> x) const {
    return baseline(y) + amplitude_ * bump_field(y, x);
}

Dataset BumpDensityGenerator::sample(std::size_t n, std::uint64_t seed) const {
    Dataset out;
    out.x_dim = cfg_.D_X;
    out.y_dim = cfg_.D_Y;
    Rng rng(seed, 0x5a11);
    std::vector<double> x(static_cast<std::size_t>(cfg_.D_X), 0.0);
    std::vector<double> y(static_cast<std::size_t>(cfg_.D_Y));
    InverseCdf tab;
    tab.grid = cdf_grid_;
    tab.cdf = cdf_val_;
    for (std::size_t i = 0; i < n; ++i) {
        for (int a = 0; a < cfg_.d_X; ++a) x[static_cast<std::size_t>(a)] = rng.uniform();
        for (;;) {
            for (auto& v : y) v = tab.sample(rng.uniform());
            double b = baseline(y);
            if (b <= 0.0) continue;
            double ratio = density(y, x) / (envelope_ * b);
            if (rng.uniform() <= ratio) break;
        }
        out.push_back(x, y);
    }
    return out;
}

wavelet::CoeffMap BumpDensityGenerator::coefficients(std::span<const double> x,
                                                     const wavelet::Basis& basis, int J,
                                                     double radius) const {
    const int quad_depth = cfg_.D_Y == 1 ? 12 : (cfg_.D_Y == 2 ? 7 : 5);
    if (base_coeffs_J_ < J) {
        base_coeffs_.clear();
        bump_cache_.clear();
        const double c1 = cfg_.m1 * std::sqrt(0.5 * cfg_.D_Y);
        std::size_t m1cells = 1;
        for (int i = 0; i < cfg_.D_Y; ++i) m1cells *= static_cast<std::size_t>(cfg_.m1);
        for (int j = 0; j <= J; ++j) {
            for (const auto& idx : wavelet::enumerate_indices(basis, j, cfg_.D_Y, radius)) {
                base_coeffs_[idx] = wavelet::function_coefficient(
                    basis, idx, [this](std::span<const double> yy) { return baseline(yy); },
                    quad_depth);
                // per response-cell bump integrals over this index's support
                std::vector<std::pair<std::size_t, double>> entries;
                for (std::size_t cell = 0; cell < m1cells; ++cell) {
                    // decode cell -> xi1 per axis, check overlap with the support rect
                    auto rect = wavelet::support_rect(basis, idx);
                    std::size_t rem = cell;
                    std::vector<int> xi1(static_cast<std::size_t>(cfg_.D_Y));
                    for (int a = cfg_.D_Y - 1; a >= 0; --a) {
                        xi1[static_cast<std::size_t>(a)] = static_cast<int>(rem % static_cast<std::size_t>(cfg_.m1)) + 1;
                        rem /= static_cast<std::size_t>(cfg_.m1);
                    }
                    bool overlap = true;
                    for (int a = 0; a < cfg_.D_Y; ++a) {
                        if (xi1[static_cast<std::size_t>(a)] < valid_cell_lo_ ||
                            xi1[static_cast<std::size_t>(a)] > valid_cell_hi_) {
                            overlap = false;
                            break;
                        }
                        double lo = (xi1[static_cast<std::size_t>(a)] - 0.5 * cfg_.m1) / c1;
                        double hi = (xi1[static_cast<std::size_t>(a)] + 1.0 - 0.5 * cfg_.m1) / c1;
                        if (hi <= rect.lo[static_cast<std::size_t>(a)] || lo >= rect.hi[static_cast<std::size_t>(a)]) {
                            overlap = false;
                            break;
                        }
                    }
                    if (!overlap) continue;
                    double integral = wavelet::function_coefficient(
                        basis, idx,
                        [&](std::span<const double> yy) {
                            double p = 1.0;
                            for (int a = 0; a < cfg_.D_Y; ++a) {
                                double u = c1 * yy[static_cast<std::size_t>(a)] + 0.5 * cfg_.m1 -
                                           xi1[static_cast<std::size_t>(a)];
                                p *= bump_ktilde(u, smooth_s_);
                                if (p == 0.0) return 0.0;
                            }
                            return p;
                        },
                        quad_depth);
                    if (integral != 0.0) entries.emplace_back(cell, integral);
                }
                if (!entries.empty()) bump_cache_[idx] = std::move(entries);
            }
        }
        base_coeffs_J_ = J;
    }

    wavelet::CoeffMap out;
    auto [xcell, xfac] = active_covariate_cell(x);
    std::size_t m2pow = 1;
    for (int i = 0; i < cfg_.d_X; ++i) m2pow *= static_cast<std::size_t>(cfg_.m2);
    for (const auto& [idx, base] : base_coeffs_) {
        if (idx.level > J) continue;
        double v = base;
        if (xfac != 0.0) {
            auto it = bump_cache_.find(idx);
            if (it != bump_cache_.end()) {
                for (const auto& [ycell, integral] : it->second) {
                    std::size_t flat = ycell * m2pow + xcell;
                    if (omega_[flat]) v += amplitude_ * xfac * integral;
                }
            }
        }
        out[idx] = v;
    }
    return out;
}

// ---------------------------------------------------------------------------

ManifoldFamilyGenerator::ManifoldFamilyGenerator(ManifoldFamilyConfig cfg,
                                                 std::vector<std::uint8_t> omega)
    : cfg_(cfg), omega_(std::move(omega)) {
    if (cfg_.D_Y < cfg_.d_Y + 1) throw std::invalid_argument("manifold generator: need D_Y >= d_Y + 1");
    if (cfg_.D_X < cfg_.d_X) throw std::invalid_argument("manifold generator: D_X < d_X");
    std::size_t need = 1;
    for (int i = 0; i < cfg_.d_Y; ++i) need *= static_cast<std::size_t>(cfg_.m1);
    for (int i = 0; i < cfg_.d_X; ++i) need *= static_cast<std::size_t>(cfg_.m2);
    if (omega_.size() != need) throw std::invalid_argument("manifold generator: omega tensor size mismatch");

    amplitude_ = cfg_.amplitude_scale * std::pow(static_cast<double>(cfg_.m1), -cfg_.beta_Y);

    const int d = cfg_.d_Y;
    auto latent_density = [d](double r) {
        return std::pow(r, d - 1) * std::sqrt(2.0) / std::sqrt(2.0 - r * r);
    };
    InverseCdf lat = InverseCdf::build(0.0, 1.0, 4096, latent_density);
    latent_cdf_r_ = lat.grid;
    latent_cdf_v_ = lat.cdf;
    double ctilde = lat.total_mass(0.0, 1.0, 4096, latent_density) *
                    (d >= 2 ? unit_sphere_area(d - 1) : 2.0);
    double total = std::pow(2.0, 0.5 * d) * unit_sphere_area(d);
    chart_fraction_ = ctilde / total;

    auto cap_density = [d](double t) { return std::pow(std::sin(t), d - 1); };
    InverseCdf cap = InverseCdf::build(kPi / 4.0, kPi, 4096, cap_density);
    cap_cdf_t_ = cap.grid;
    cap_cdf_v_ = cap.cdf;
}

ManifoldFamilyGenerator ManifoldFamilyGenerator::with_random_signs(const ManifoldFamilyConfig& cfg,
                                                                   std::uint64_t seed) {
    std::size_t need = 1;
    for (int i = 0; i < cfg.d_Y; ++i) need *= static_cast<std::size_t>(cfg.m1);
    for (int i = 0; i < cfg.d_X; ++i) need *= static_cast<std::size_t>(cfg.m2);
    Rng rng(seed, 0x90de1);
    std::vector<std::uint8_t> omega(need);
    for (auto& v : omega) v = static_cast<std::uint8_t>(rng.next_u64() & 1u);
    return ManifoldFamilyGenerator(cfg, std::move(omega));
}

double ManifoldFamilyGenerator::multibump(std::span<const double> z,
                                          std::span<const double> x) const {
    const double c1 = cfg_.m1 * std::sqrt(0.5 * cfg_.d_Y);
    const double c2 = cfg_.m2 * std::sqrt(0.5 * cfg_.d_X);
    std::size_t flat = 0;
    double fac = 1.0;
    for (int i = 0; i < cfg_.d_Y; ++i) {
        double u = c1 * z[static_cast<std::size_t>(i)] + 0.5 * cfg_.m1;
        int cell = static_cast<int>(std::floor(u));
        if (cell < 1 || cell > cfg_.m1) return 0.0;
        fac *= bump_k(u - cell, cfg_.beta_Y);
        if (fac == 0.0) return 0.0;
        flat = flat * static_cast<std::size_t>(cfg_.m1) + static_cast<std::size_t>(cell - 1);
    }
    for (int i = 0; i < cfg_.d_X; ++i) {
        double u = c2 * x[static_cast<std::size_t>(i)] + 0.5 * cfg_.m2;
        int cell = static_cast<int>(std::floor(u));
        if (cell < 1 || cell > cfg_.m2) return 0.0;
        fac *= bump_k(u - cell, cfg_.beta_Y);
        if (fac == 0.0) return 0.0;
        flat = flat * static_cast<std::size_t>(cfg_.m2) + static_cast<std::size_t>(cell - 1);
    }
    return omega_[flat] ? amplitude_ * fac : 0.0;
}

std::vector<double> ManifoldFamilyGenerator::chart(std::span<const double> z,
                                                   std::span<const double> x) const {
    auto y = sphere_chart(z, cfg_.d_Y, cfg_.D_Y);
    y[static_cast<std::size_t>(cfg_.d_Y)] += multibump(z, x);
    return y;
}

Dataset ManifoldFamilyGenerator::sample(std::size_t n, std::uint64_t seed) const {
    Dataset out;
    out.x_dim = cfg_.D_X;
    out.y_dim = cfg_.D_Y;
    Rng rng(seed, 0x3a3);
    InverseCdf lat{latent_cdf_r_, latent_cdf_v_};
    InverseCdf cap{cap_cdf_t_, cap_cdf_v_};
    std::vector<double> x(static_cast<std::size_t>(cfg_.D_X), 0.0);
    std::vector<double> z(static_cast<std::size_t>(cfg_.d_Y));
    for (std::size_t i = 0; i < n; ++i) {
        for (int a = 0; a < cfg_.d_X; ++a) x[static_cast<std::size_t>(a)] = rng.uniform(-1.0, 1.0);
        std::vector<double> y;
        if (rng.uniform() < chart_fraction_) {
            double r = lat.sample(rng.uniform());
            if (cfg_.d_Y == 1) {
                z[0] = (rng.uniform() < 0.5 ? -1.0 : 1.0) * r;
            } else {
                auto u = gaussian_direction(rng, cfg_.d_Y);
                for (int a = 0; a < cfg_.d_Y; ++a) z[static_cast<std::size_t>(a)] = r * u[static_cast<std::size_t>(a)];
            }
            y = chart(z, x);
        } else {
            double theta = cap.sample(rng.uniform());
            y.assign(static_cast<std::size_t>(cfg_.D_Y), 0.0);
            double s = std::sqrt(2.0) * std::sin(theta);
            if (cfg_.d_Y == 1) {
                y[0] = (rng.uniform() < 0.5 ? -1.0 : 1.0) * s;
            } else {
                auto u = gaussian_direction(rng, cfg_.d_Y);
                for (int a = 0; a < cfg_.d_Y; ++a) y[static_cast<std::size_t>(a)] = s * u[static_cast<std::size_t>(a)];
            }
            y[static_cast<std::size_t>(cfg_.d_Y)] = std::sqrt(2.0) * std::cos(theta);
        }
        out.push_back(x, y);
    }
    return out;
}

std::vector<std::vector<double>> ManifoldFamilyGenerator::ground_truth_manifold(
    std::span<const double> x, int resolution) const {
    if (resolution < 16) throw std::invalid_argument("ground_truth_manifold: resolution must be >= 16");
    std::vector<std::vector<double>> cloud;
    if (cfg_.d_Y == 1) {
        for (int i = 0; i <= resolution; ++i) {
            double z = -1.0 + 2.0 * i / resolution;
            double zz[1] = {z};
            cloud.push_back(chart(zz, x));
        }
        int caps = 3 * resolution;
        for (int i = 0; i <= caps; ++i) {
            double t = kPi / 4.0 + (kPi - kPi / 4.0) * i / caps;
            for (double sgn : {-1.0, 1.0}) {
                std::vector<double> y(static_cast<std::size_t>(cfg_.D_Y), 0.0);
                y[0] = sgn * std::sqrt(2.0) * std::sin(t);
                y[1] = std::sqrt(2.0) * std::cos(t);
                cloud.push_back(std::move(y));
            }
        }
    } else if (cfg_.d_Y == 2) {
        for (int i = 0; i <= resolution; ++i)
            for (int j = 0; j <= resolution; ++j) {
                double z[2] = {-1.0 + 2.0 * i / resolution, -1.0 + 2.0 * j / resolution};
                if (z[0] * z[0] + z[1] * z[1] > 1.0) continue;
                cloud.push_back(chart(z, x));
            }
        int caps = 2 * resolution;
        for (int i = 0; i <= caps; ++i) {
            double t = kPi / 4.0 + (kPi - kPi / 4.0) * i / caps;
            for (int j = 0; j < caps; ++j) {
                double phi = 2.0 * kPi * j / caps;
                std::vector<double> y(static_cast<std::size_t>(cfg_.D_Y), 0.0);
                double s = std::sqrt(2.0) * std::sin(t);
                y[0] = s * std::cos(phi);
                y[1] = s * std::sin(phi);
                y[2] = std::sqrt(2.0) * std::cos(t);
                cloud.push_back(std::move(y));
            }
        }
    } else {
        throw std::invalid_argument("ground_truth_manifold: latent grids implemented for d_Y <= 2");
    }
    return cloud;
}

// ---------------------------------------------------------------------------

double CircleFamilyGenerator::radius(double x) const {
    return cfg_.base_radius + cfg_.amp * std::sin(kPi * x);
}

Dataset CircleFamilyGenerator::sample(std::size_t n, std::uint64_t seed) const {
    Dataset out;
    out.x_dim = 1;
    out.y_dim = 2;
    Rng rng(seed, 0xc1c);
    for (std::size_t i = 0; i < n; ++i) {
        double x = rng.uniform(-1.0, 1.0);
        double theta = rng.uniform(0.0, 2.0 * kPi);
        double r = radius(x);
        double xr[1] = {x};
        double y[2] = {r * std::cos(theta), r * std::sin(theta)};
        out.push_back(xr, y);
    }
    return out;
}

std::vector<std::vector<double>> CircleFamilyGenerator::truth_cloud(double x, int resolution) const {
    std::vector<std::vector<double>> cloud;
    double r = radius(x);
    for (int i = 0; i < resolution; ++i) {
        double t = 2.0 * kPi * i / resolution;
        cloud.push_back({r * std::cos(t), r * std::sin(t)});
    }
    return cloud;
}

} // namespace distreg::synthetic
