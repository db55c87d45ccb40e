#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "distreg/rng.hpp"
#include "distreg/synthetic.hpp"

#include <algorithm>
#include <cmath>

using namespace distreg;
using namespace distreg::synthetic;

namespace {

double brute_hausdorff(const std::vector<std::vector<double>>& A,
                       const std::vector<std::vector<double>>& B) {
    auto one_sided = [](const auto& P, const auto& Q) {
        double worst = 0;
        for (const auto& p : P) {
            double best = 1e300;
            for (const auto& q : Q) {
                double d2 = 0;
                for (std::size_t i = 0; i < p.size(); ++i) d2 += (p[i] - q[i]) * (p[i] - q[i]);
                best = std::min(best, d2);
            }
            worst = std::max(worst, std::sqrt(best));
        }
        return worst;
    };
    return one_sided(A, B) + one_sided(B, A);
}

} // namespace

TEST_CASE("bump function closed forms") {
    CHECK(bump_k(0.5, 2.0) == doctest::Approx(0.015625).epsilon(1e-15));
    CHECK(bump_k(0.0, 2.0) == 0.0);
    CHECK(bump_k(1.0, 2.0) == 0.0);
    CHECK(bump_k(-0.3, 2.0) == 0.0);
    CHECK(bump_ktilde(0.5, 1.0) == 0.0); // zero crossing at the midpoint
    CHECK(bump_ktilde(0.25, 1.0) < 0.0);
    CHECK(bump_ktilde(0.75, 1.0) > 0.0);
}

TEST_CASE("sphere chart formula and constraint") {
    double z0[1] = {0.0};
    auto p = sphere_chart(z0, 1, 3);
    REQUIRE(p.size() == 3);
    CHECK(p[0] == 0.0);
    CHECK(p[1] == doctest::Approx(std::sqrt(2.0)));
    CHECK(p[2] == 0.0);

    double z1[1] = {1.0};
    auto q = sphere_chart(z1, 1, 2);
    CHECK(q[0] == doctest::Approx(1.0));
    CHECK(q[1] == doctest::Approx(1.0));

    Rng rng(4);
    for (int t = 0; t < 20; ++t) {
        double z[2] = {rng.uniform(-0.7, 0.7), rng.uniform(-0.7, 0.7)};
        auto y = sphere_chart(z, 2, 4);
        double n2 = 0;
        for (double v : y) n2 += v * v;
        CHECK(n2 == doctest::Approx(2.0).epsilon(1e-12));
    }
    double zbad[1] = {1.5};
    CHECK_THROWS_AS((void)sphere_chart(zbad, 1, 3), std::domain_error);
}

TEST_CASE("euclidean generator: conditional density integrates to one") {
    auto gen = BumpDensityGenerator::with_random_signs({.m1 = 4, .m2 = 2}, 99);
    for (double xv : {0.1, 0.4, 0.8}) {
        double x[1] = {xv};
        const int M = 4000;
        double acc = 0, h = 2.0 / M;
        for (int i = 0; i < M; ++i) {
            double y[1] = {-1.0 + (i + 0.5) * h};
            acc += gen.density(y, x) * h;
        }
        CHECK(acc == doctest::Approx(1.0).epsilon(1e-3));
    }
}

TEST_CASE("euclidean generator: positivity guard rejects oversized amplitudes") {
    BumpDensityConfig cfg{.m1 = 4, .m2 = 2, .amplitude_scale = 1e6};
    std::size_t need = 4 * 2;
    std::vector<std::uint8_t> omega(need, 1);
    CHECK_THROWS(BumpDensityGenerator(cfg, omega));
    // density stays positive with the automatic amplitude
    auto gen = BumpDensityGenerator(BumpDensityConfig{.m1 = 4, .m2 = 2}, omega);
    Rng rng(8);
    for (int t = 0; t < 500; ++t) {
        double y[1] = {rng.uniform(-0.99, 0.99)};
        double x[1] = {rng.uniform()};
        CHECK(gen.density(y, x) >= 0.0);
    }
}

TEST_CASE("euclidean sampler: empty draw and reproducibility") {
    auto gen = BumpDensityGenerator::with_random_signs({}, 3);
    CHECK(gen.sample(0, 1).size() == 0);
    auto a = gen.sample(33, 1234);
    auto b = gen.sample(33, 1234);
    CHECK(a.xs == b.xs);
    CHECK(a.ys == b.ys);
    auto c = gen.sample(33, 1235);
    CHECK(a.ys != c.ys);
}

TEST_CASE("euclidean sampler: baseline marginal passes a KS check") {
    std::vector<std::uint8_t> omega(4 * 2, 0);
    BumpDensityGenerator gen({.m1 = 4, .m2 = 2}, omega);
    const std::size_t n = 100000;
    auto data = gen.sample(n, 777);
    std::vector<double> ys(n);
    for (std::size_t i = 0; i < n; ++i) ys[i] = data.y(i)[0];
    std::sort(ys.begin(), ys.end());
    // independent quadrature CDF of nu0 (a = alpha_Y v gamma = 1)
    auto q = [](double t) { return std::pow((1.0 - t) * (1.0 + t), 2.0); };
    const int M = 20000;
    std::vector<double> cdf(M + 1, 0.0);
    double h = 2.0 / M;
    for (int i = 1; i <= M; ++i)
        cdf[static_cast<std::size_t>(i)] = cdf[static_cast<std::size_t>(i) - 1] +
                                           0.5 * (q(-1 + (i - 1) * h) + q(-1 + i * h)) * h;
    for (auto& v : cdf) v /= cdf[static_cast<std::size_t>(M)];
    double ks = 0;
    for (std::size_t i = 0; i < n; ++i) {
        double t = (ys[i] + 1.0) / h;
        int g = std::clamp(static_cast<int>(t), 0, M - 1);
        double frac = t - g;
        double F = cdf[static_cast<std::size_t>(g)] * (1 - frac) + cdf[static_cast<std::size_t>(g) + 1] * frac;
        double Fn_hi = static_cast<double>(i + 1) / static_cast<double>(n);
        double Fn_lo = static_cast<double>(i) / static_cast<double>(n);
        ks = std::max({ks, std::abs(F - Fn_hi), std::abs(F - Fn_lo)});
    }
    CHECK(ks <= 0.02);
}

TEST_CASE("euclidean sampler: one active bump lifts the conditional mean by its integral") {
    BumpDensityConfig cfg{.m1 = 4, .m2 = 2};
    std::vector<std::uint8_t> flat(4 * 2, 0), lifted(4 * 2, 0);
    lifted[(2 - 1) * 2 + (1 - 1)] = 1; // activate cell (xi1=2, xi2=1)
    BumpDensityGenerator g0(cfg, flat), g1(cfg, lifted);
    double c1 = cfg.m1 * std::sqrt(0.5), c2 = cfg.m2 * std::sqrt(2.0);
    double x[1] = {(1.0 + 0.75) / c2}; // inside the xi2=1 cell, off the zero crossing
    auto g = [&](double y) { return bump_ktilde(c1 * y + 0.5 * cfg.m1 - 2.0, 1.0); };

    // exact quadrature: the conditional-mean excess equals amplitude * xfac * int g^2
    const int M = 400000;
    double h = 2.0 / M, mean0 = 0, mean1 = 0, self = 0;
    for (int i = 0; i < M; ++i) {
        double y = -1.0 + (i + 0.5) * h;
        double yy[1] = {y};
        mean0 += g(y) * g0.density(yy, x) * h;
        mean1 += g(y) * g1.density(yy, x) * h;
        self += g(y) * g(y) * h;
    }
    double xfac = bump_ktilde(c2 * x[0] - 1.0, 1.0);
    double expected_excess = g1.amplitude() * xfac * self;
    CHECK(expected_excess > 0.0);
    CHECK(mean1 - mean0 == doctest::Approx(expected_excess).epsilon(1e-6));

    // the sampler reproduces the density: Monte-Carlo mean of a coarse test
    // function within error bars
    auto data = g1.sample(60000, 2718);
    auto f = [](double y) { return y * y; };
    double mc = 0;
    for (std::size_t i = 0; i < data.size(); ++i) mc += f(data.y(i)[0]);
    mc /= static_cast<double>(data.size());
    // quadrature of f against the x-marginalized conditional density
    double truth = 0;
    const int MX = 400;
    for (int ix = 0; ix < MX; ++ix) {
        double xv[1] = {(ix + 0.5) / MX};
        for (int i = 0; i < 4000; ++i) {
            double yy[1] = {-1.0 + (i + 0.5) * (2.0 / 4000)};
            truth += f(yy[0]) * g1.density(yy, xv) * (2.0 / 4000) / MX;
        }
    }
    double se = 0.5 / std::sqrt(60000.0);
    CHECK(std::abs(mc - truth) <= 4 * se);
}

TEST_CASE("truth coefficients match direct quadrature of the density") {
    auto gen = BumpDensityGenerator::with_random_signs({.m1 = 4, .m2 = 2}, 5);
    auto basis = wavelet::Basis::build({.order = 4, .regularity = 1, .resolution = 12});
    double x[1] = {0.37};
    auto coeffs = gen.coefficients(x, basis, 2, 1.0);
    REQUIRE(!coeffs.empty());
    int checked = 0;
    for (const auto& [idx, v] : coeffs) {
        double direct = wavelet::function_coefficient(
            basis, idx, [&](std::span<const double> yy) { return gen.density(yy, x); }, 12);
        CHECK(v == doctest::Approx(direct).epsilon(1e-7).scale(1.0));
        if (++checked > 12) break;
    }
}

TEST_CASE("sign flip only changes the density inside that bump's rectangle") {
    BumpDensityConfig cfg{.m1 = 4, .m2 = 2};
    std::vector<std::uint8_t> a(4 * 2, 0), b(4 * 2, 0);
    b[(3 - 1) * 2 + (2 - 1)] = 1; // flip (xi1=3, xi2=2)
    BumpDensityGenerator ga(cfg, a), gb(cfg, b);
    double c1 = cfg.m1 * std::sqrt(0.5), c2 = cfg.m2 * std::sqrt(2.0);
    double ylo = (3.0 - 0.5 * cfg.m1) / c1, yhi = (4.0 - 0.5 * cfg.m1) / c1;
    double xlo = 2.0 / c2, xhi = 3.0 / c2;
    Rng rng(6);
    for (int t = 0; t < 400; ++t) {
        double y[1] = {rng.uniform(-1, 1)};
        double x[1] = {rng.uniform()};
        bool inside = y[0] > ylo && y[0] < yhi && x[0] > xlo && x[0] < xhi;
        double da = ga.density(y, x), db = gb.density(y, x);
        if (!inside) CHECK(da == db);
    }
    double ymid[1] = {0.5 * (ylo + yhi) - 0.1 / c1};
    double xmid[1] = {0.5 * (xlo + xhi) - 0.1 / c2};
    CHECK(ga.density(ymid, xmid) != gb.density(ymid, xmid));
}

TEST_CASE("manifold family: unperturbed samples live on the sphere") {
    std::vector<std::uint8_t> omega(3 * 2, 0);
    ManifoldFamilyGenerator gen({.m1 = 3, .m2 = 2}, omega);
    auto data = gen.sample(500, 42);
    for (std::size_t i = 0; i < data.size(); ++i) {
        auto y = data.y(i);
        double n2 = y[0] * y[0] + y[1] * y[1];
        CHECK(std::abs(n2 - 2.0) <= 1e-10);
        CHECK(y[2] == 0.0);
    }
}

TEST_CASE("manifold family: perturbed deviation bounded by the multibump sup") {
    std::vector<std::uint8_t> omega(3 * 2, 1);
    ManifoldFamilyGenerator gen({.m1 = 3, .m2 = 2}, omega);
    // grid search the multibump sup
    double supg = 0;
    for (int i = 0; i <= 400; ++i)
        for (int j = 0; j <= 400; ++j) {
            double z[1] = {-1.0 + 2.0 * i / 400};
            double x[1] = {-1.0 + 2.0 * j / 400};
            supg = std::max(supg, std::abs(gen.multibump(z, x)));
        }
    CHECK(supg > 0);
    auto data = gen.sample(2000, 7);
    for (std::size_t i = 0; i < data.size(); ++i) {
        auto y = data.y(i);
        double n = std::sqrt(y[0] * y[0] + y[1] * y[1] + y[2] * y[2]);
        CHECK(std::abs(n - std::sqrt(2.0)) <= 1.5 * supg + 1e-10);
    }
    auto a = gen.sample(1, 99);
    auto b = gen.sample(1, 99);
    CHECK(a.ys == b.ys);
    CHECK(a.xs == b.xs);
}

TEST_CASE("ground-truth grids: sphere constraint, refinement, x-independence at omega=0") {
    std::vector<std::uint8_t> omega(3 * 2, 0);
    ManifoldFamilyGenerator gen({.m1 = 3, .m2 = 2}, omega);
    double x1[1] = {0.2}, x2[1] = {-0.6};
    auto coarse = gen.ground_truth_manifold(x1, 32);
    for (const auto& p : coarse) {
        double n2 = p[0] * p[0] + p[1] * p[1] + p[2] * p[2];
        CHECK(std::abs(n2 - 2.0) <= 1e-10);
    }
    auto fine = gen.ground_truth_manifold(x1, 64);
    // chart Lipschitz constant measured from the coarse grid
    double lip = 0;
    for (std::size_t i = 1; i + 1 < 33; ++i) {
        double step = 2.0 / 32;
        double dz = 0;
        for (int c = 0; c < 3; ++c) dz += (coarse[i + 1][static_cast<std::size_t>(c)] - coarse[i][static_cast<std::size_t>(c)]) *
                                          (coarse[i + 1][static_cast<std::size_t>(c)] - coarse[i][static_cast<std::size_t>(c)]);
        lip = std::max(lip, std::sqrt(dz) / step);
    }
    CHECK(brute_hausdorff(coarse, fine) <= (2.0 / 32) * lip + 1e-9);

    auto other = gen.ground_truth_manifold(x2, 32);
    REQUIRE(other.size() == coarse.size());
    for (std::size_t i = 0; i < coarse.size(); ++i)
        for (int c = 0; c < 3; ++c)
            CHECK(other[i][static_cast<std::size_t>(c)] == coarse[i][static_cast<std::size_t>(c)]);
    CHECK_THROWS(gen.ground_truth_manifold(x1, 8));
}

TEST_CASE("circle family: exact radius and truth cloud") {
    CircleFamilyGenerator gen;
    auto data = gen.sample(300, 21);
    for (std::size_t i = 0; i < data.size(); ++i) {
        double r = gen.radius(data.x(i)[0]);
        double n = std::sqrt(data.y(i)[0] * data.y(i)[0] + data.y(i)[1] * data.y(i)[1]);
        CHECK(std::abs(n - r) <= 1e-12);
    }
    auto cloud = gen.truth_cloud(0.5, 64);
    CHECK(cloud.size() == 64);
    for (const auto& p : cloud)
        CHECK(std::sqrt(p[0] * p[0] + p[1] * p[1]) == doctest::Approx(gen.radius(0.5)).epsilon(1e-12));
}
