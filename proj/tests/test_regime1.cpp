#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "distreg/regime1.hpp"
#include "distreg/rng.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <array>

using namespace distreg;
using namespace distreg::regime1;

namespace {

Dataset independent_uniform(std::size_t n, std::uint64_t seed) {
    Dataset d;
    d.x_dim = 1;
    d.y_dim = 1;
    Rng rng(seed);
    for (std::size_t i = 0; i < n; ++i) {
        double x[1] = {rng.uniform()};
        double y[1] = {rng.uniform(-1.0, 1.0)};
        d.push_back(x, y);
    }
    return d;
}

// quadrature coefficient of the uniform density on [-1,1]
double uniform_coeff(const wavelet::Basis& b, const wavelet::Index& idx) {
    return wavelet::function_coefficient(
        b, idx,
        [](std::span<const double> y) { return (y[0] >= -1.0 && y[0] <= 1.0) ? 0.5 : 0.0; }, 12);
}

} // namespace

TEST_CASE("truncation level formula") {
    CHECK(truncation_level_for_ratio(256.0, 1, 1, 1, 1) == 2);
    CHECK(truncation_level_for_ratio(2.0, 1, 1, 1, 1) == 1);
    // nonincreasing in alpha_Y at fixed ratio
    int prev = 1000;
    for (double aY : {0.5, 1.0, 2.0, 4.0, 8.0}) {
        int J = truncation_level_for_ratio(4096.0, aY, 1.0, 1, 1);
        CHECK(J <= prev);
        prev = J;
    }
    CHECK_THROWS(truncation_level(2, 1, 1, 1, 1));
}

TEST_CASE("bandwidth schedule") {
    CHECK(bandwidth_for_ratio(0, 8.0, 1.0, 1, 1) == doctest::Approx(0.5).epsilon(1e-12));
    double r = bandwidth_for_ratio(3, 100.0, 1.0, 1, 1) / bandwidth_for_ratio(2, 100.0, 1.0, 1, 1);
    CHECK(r == doctest::Approx(std::pow(2.0, 1.0 / 3.0)).epsilon(1e-12));
    // latent variant swaps the ambient dimension for the intrinsic one
    double amb = bandwidth_for_ratio(2, 64.0, 1.0, 1, 3);
    double lat = bandwidth_for_ratio(2, 64.0, 1.0, 1, 1);
    CHECK(amb == doctest::Approx(std::pow(2.0, 2.0 * 3.0 / 3.0) * std::pow(64.0, -1.0 / 3.0)));
    CHECK(lat == doctest::Approx(std::pow(2.0, 2.0 * 1.0 / 3.0) * std::pow(64.0, -1.0 / 3.0)));
}

TEST_CASE("fit rejects bad inputs") {
    Regime1Config cfg;
    Dataset empty;
    empty.x_dim = 1;
    empty.y_dim = 1;
    CHECK_THROWS(Regime1Model::fit(empty, cfg));
    Dataset off;
    off.x_dim = 1;
    off.y_dim = 1;
    double x[1] = {0.5}, y[1] = {3.0};
    off.push_back(x, y);
    CHECK_THROWS(Regime1Model::fit(off, cfg));
}

TEST_CASE("independent uniform: coefficients match the quadrature oracle") {
    auto data = independent_uniform(4000, 17);
    Regime1Config cfg;
    auto model = Regime1Model::fit(data, cfg);
    CHECK(model.level_cap() >= 2);
    int checked = 0;
    for (double xv : {0.25, 0.5, 0.75}) {
        double x[1] = {xv};
        for (int j = 0; j <= 1; ++j) {
            for (const auto& idx : wavelet::enumerate_indices(model.basis(), j, 1, cfg.L)) {
                double truth = uniform_coeff(model.basis(), idx);
                double est = model.coefficient(idx, x);
                CHECK(std::abs(est - truth) < 0.12);
                ++checked;
            }
        }
    }
    CHECK(checked > 30);
}

TEST_CASE("one-point dataset still fits") {
    Dataset d;
    d.x_dim = 1;
    d.y_dim = 1;
    double x[1] = {0.5}, y[1] = {0.25};
    d.push_back(x, y);
    Regime1Config cfg;
    cfg.override_J = 1;
    auto model = Regime1Model::fit(d, cfg);
    CHECK(model.stored_indices() > 0);
    double v = model.eval_density(y, x);
    CHECK(std::isfinite(v));
}

TEST_CASE("two covariate clusters produce cluster-specific sign patterns") {
    Dataset d;
    d.x_dim = 1;
    d.y_dim = 1;
    Rng rng(23);
    for (int i = 0; i < 3000; ++i) {
        bool left = (i % 2) == 0;
        double x[1] = {left ? rng.uniform(0.15, 0.25) : rng.uniform(0.75, 0.85)};
        double y[1] = {left ? rng.uniform(-1.0, 0.0) : rng.uniform(0.0, 1.0)};
        d.push_back(x, y);
    }
    Regime1Config cfg;
    auto model = Regime1Model::fit(d, cfg);
    auto coeff_oracle = [&](const wavelet::Index& idx, double lo, double hi) {
        return wavelet::function_coefficient(
            model.basis(), idx,
            [&](std::span<const double> y) { return (y[0] >= lo && y[0] <= hi) ? 1.0 / (hi - lo) : 0.0; },
            12);
    };
    double xl[1] = {0.2}, xr[1] = {0.8};
    int sign_checked = 0;
    for (int j = 0; j <= 1; ++j) {
        for (const auto& idx : wavelet::enumerate_indices(model.basis(), j, 1, cfg.L)) {
            double tl = coeff_oracle(idx, -1.0, 0.0);
            double tr = coeff_oracle(idx, 0.0, 1.0);
            if (std::abs(tl) > 0.12) {
                CHECK(model.coefficient(idx, xl) * tl > 0.0);
                ++sign_checked;
            }
            if (std::abs(tr) > 0.12) {
                CHECK(model.coefficient(idx, xr) * tr > 0.0);
                ++sign_checked;
            }
        }
    }
    CHECK(sign_checked >= 6);
}

TEST_CASE("density integral reduces to the level-0 scaling terms") {
    auto data = independent_uniform(2000, 5);
    Regime1Config cfg;
    auto model = Regime1Model::fit(data, cfg);
    double x[1] = {0.4};
    const int M = 20000;
    double lo = -cfg.L - model.basis().support_length(), hi = cfg.L + model.basis().support_length();
    double h = (hi - lo) / M, integral = 0;
    for (int i = 0; i < M; ++i) {
        double y[1] = {lo + (i + 0.5) * h};
        integral += model.eval_density(y, x) * h;
    }
    double scaling_sum = 0;
    for (const auto& idx : wavelet::enumerate_indices(model.basis(), 0, 1, cfg.L)) {
        double ipsi = wavelet::function_coefficient(
            model.basis(), idx, [](std::span<const double>) { return 1.0; }, 10);
        scaling_sum += model.coefficient(idx, x) * ipsi;
    }
    CHECK(integral == doctest::Approx(scaling_sum).epsilon(5e-3).scale(1.0));
}

TEST_CASE("independent uniform at n=1e5: density close to 1/2 inside the window") {
    auto data = independent_uniform(100000, 3141);
    Regime1Config cfg;
    auto model = Regime1Model::fit(data, cfg);
    for (double yv : {-0.8, -0.3, 0.1, 0.6}) {
        for (double xv : {0.3, 0.7}) {
            double y[1] = {yv}, x[1] = {xv};
            CHECK(std::abs(model.eval_density(y, x) - 0.5) <= 0.1);
        }
    }
}

TEST_CASE("mean functional: zero map, single basis function, and first moment") {
    auto data = independent_uniform(20000, 77);
    Regime1Config cfg;
    auto model = Regime1Model::fit(data, cfg);
    double x[1] = {0.5};
    CHECK(model.mean_functional({}, x) == 0.0);

    wavelet::Index one{.level = 1, .type = 1, .shift = {-2}};
    wavelet::CoeffMap f;
    f[one] = 1.0;
    CHECK(model.mean_functional(f, x) == doctest::Approx(model.coefficient(one, x)));

    // f(y) = y on the window: coefficients by quadrature, mean ~ 0
    wavelet::CoeffMap fy;
    for (int j = 0; j <= model.level_cap(); ++j)
        for (const auto& idx : wavelet::enumerate_indices(model.basis(), j, 1, cfg.L))
            fy[idx] = wavelet::function_coefficient(
                model.basis(), idx,
                [](std::span<const double> y) { return (std::abs(y[0]) <= 1.0) ? y[0] : 0.0; }, 12);
    double est = model.mean_functional(fy, x);
    double mc = 0; // Monte-Carlo conditional mean of f(Y) (Y independent of X)
    for (std::size_t i = 0; i < data.size(); ++i) mc += data.y(i)[0];
    mc /= static_cast<double>(data.size());
    double se = (1.0 / std::sqrt(3.0)) / std::sqrt(static_cast<double>(data.size()));
    CHECK(std::abs(est - mc) <= 2 * se + 0.02);
}

TEST_CASE("linearity and cap interplay of the per-index fits") {
    auto data = independent_uniform(1500, 9);
    std::vector<std::vector<double>> xs(data.size());
    for (std::size_t i = 0; i < data.size(); ++i) xs[i].assign(data.x(i).begin(), data.x(i).end());
    auto centers = smoothers::greedy_packing(xs, 0.2, 0);
    auto design = smoothers::LocalPolyDesign::build(xs, centers, 0.25, 1.0, 1e-3);
    std::vector<double> r(data.size());
    for (std::size_t i = 0; i < data.size(); ++i) r[i] = std::sin(3.0 * data.y(i)[0]);
    auto m1 = design.fit(r, 1e9);
    std::vector<double> r2 = r;
    for (auto& v : r2) v *= 2.5;
    auto m2 = design.fit(r2, 1e9);
    for (std::size_t c = 0; c < m1.coef.size(); ++c)
        CHECK(m2.coef[c] == doctest::Approx(2.5 * m1.coef[c]).epsilon(1e-8));
}

TEST_CASE("prediction invariant to sample order with fixed centers") {
    auto data = independent_uniform(800, 13);
    std::vector<std::vector<double>> xs(data.size());
    std::vector<double> r(data.size());
    for (std::size_t i = 0; i < data.size(); ++i) {
        xs[i].assign(data.x(i).begin(), data.x(i).end());
        r[i] = std::cos(2.0 * data.y(i)[0]);
    }
    auto centers = smoothers::greedy_packing(xs, 0.2, 0);
    auto d1 = smoothers::LocalPolyDesign::build(xs, centers, 0.25, 1.0, 1e-3);
    auto m1 = d1.fit(r, 10.0);
    // reversed sample order, same centers
    std::vector<std::vector<double>> xs2(xs.rbegin(), xs.rend());
    std::vector<double> r2(r.rbegin(), r.rend());
    auto d2 = smoothers::LocalPolyDesign::build(xs2, centers, 0.25, 1.0, 1e-3);
    auto m2 = d2.fit(r2, 10.0);
    for (double xv : {0.1, 0.5, 0.9}) {
        double x[1] = {xv};
        CHECK(m1.eval(x) == doctest::Approx(m2.eval(x)).epsilon(1e-9));
    }
}

TEST_CASE("serialization round trip reproduces predictions exactly") {
    auto data = independent_uniform(600, 99);
    Regime1Config cfg;
    cfg.override_J = 2;
    auto model = Regime1Model::fit(data, cfg);
    std::string path = "tmp_regime1_model.txt";
    model.save(path);
    auto loaded = Regime1Model::load(path);
    CHECK(loaded.level_cap() == model.level_cap());
    CHECK(loaded.stored_indices() == model.stored_indices());
    Rng rng(1);
    for (int t = 0; t < 25; ++t) {
        double y[1] = {rng.uniform(-1, 1)}, x[1] = {rng.uniform()};
        CHECK(loaded.eval_density(y, x) == model.eval_density(y, x));
    }
    std::remove(path.c_str());
}

TEST_CASE("all-zero coefficients evaluate to zero everywhere") {
    // hand-written model file with zeroed coefficients, read through the loader
    std::string path = "tmp_regime1_zero.txt";
    {
        std::ofstream out(path);
        out << "regime1-model 1\n";
        out << "params 1 1 1 1 1 10 3\n";
        out << "basis 4 1 12\n";
        out << "fit 1 5\n";
        out << "level 0 1\n";
        out << "index 0 0 0\n";
        out << "model 2 1 0.5 0.2 10\n0.1\n0.9\n0\n0 0\n";
        out << "level 1 1\n";
        out << "index 1 1 -1\n";
        out << "model 2 1 0.5 0.2 10\n0.1\n0.9\n0\n0 0\n";
    }
    auto zeroed = Regime1Model::load(path);
    std::remove(path.c_str());
    Rng rng(2);
    for (int t = 0; t < 30; ++t) {
        double y[1] = {rng.uniform(-1, 1)}, x[1] = {rng.uniform()};
        CHECK(zeroed.eval_density(y, x) == 0.0);
    }
}
