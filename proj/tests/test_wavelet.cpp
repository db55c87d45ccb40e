#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "distreg/rng.hpp"
#include "distreg/wavelet.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>

using namespace distreg;
using namespace distreg::wavelet;

namespace {

const Basis& basis14() {
    static Basis b = Basis::build({.order = 4, .regularity = 1, .resolution = 14});
    return b;
}

double dyadic_integral(const Basis& b, bool mother, int moment) {
    return b.grid_integral(mother, [moment](double t) { return std::pow(t, moment); });
}

} // namespace

TEST_CASE("embedded filters match published Daubechies taps") {
    const auto& db2 = daubechies_filter(2);
    REQUIRE(db2.size() == 4);
    CHECK(db2[0] == doctest::Approx(0.48296291314469025).epsilon(1e-10));
    CHECK(db2[1] == doctest::Approx(0.83651630373746899).epsilon(1e-10));
    CHECK(db2[2] == doctest::Approx(0.22414386804185735).epsilon(1e-10));
    CHECK(db2[3] == doctest::Approx(-0.12940952255092145).epsilon(1e-8));

    for (int order = 2; order <= 10; ++order) {
        const auto& h = daubechies_filter(order);
        REQUIRE(static_cast<int>(h.size()) == 2 * order);
        double sum = 0;
        for (double v : h) sum += v;
        CHECK(sum == doctest::Approx(std::sqrt(2.0)).epsilon(1e-13));
        // exact double-shift orthonormality of the taps
        for (int m = 1; 2 * m < static_cast<int>(h.size()); ++m) {
            double dot = 0;
            for (int k = 0; k + 2 * m < static_cast<int>(h.size()); ++k) dot += h[k] * h[k + 2 * m];
            CHECK(std::abs(dot) < 1e-10);
        }
        // discrete vanishing moments sum (-1)^k k^m h_{N-1-k} = 0 for m < order
        for (int m = 0; m < order; ++m) {
            double s = 0;
            int N = static_cast<int>(h.size());
            for (int k = 0; k < N; ++k)
                s += ((k % 2) ? -1.0 : 1.0) * std::pow(static_cast<double>(k), m) * h[N - 1 - k];
            CHECK(std::abs(s) < 1e-7 * std::pow(10.0, m));
        }
    }
    CHECK_THROWS(daubechies_filter(1));
    CHECK_THROWS(daubechies_filter(11));
}

TEST_CASE("scaling function integrates to one and translates are orthonormal") {
    const Basis& b = basis14();
    CHECK(dyadic_integral(b, false, 0) == doctest::Approx(1.0).epsilon(1e-8));

    Index a{.level = 0, .type = 0, .shift = {0}};
    Index c{.level = 0, .type = 0, .shift = {1}};
    CHECK(std::abs(inner_product(b, a, c)) < 1e-6);
    CHECK(inner_product(b, a, a) == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("mother wavelet vanishing moment by dyadic quadrature") {
    const Basis& b = basis14();
    CHECK(std::abs(dyadic_integral(b, true, 0)) < 1e-6);
    CHECK(std::abs(dyadic_integral(b, true, 1)) < 1e-6);
}

TEST_CASE("build rejects bad configuration") {
    CHECK_THROWS(Basis::build({.order = 1, .regularity = 0, .resolution = 14}));
    CHECK_THROWS(Basis::build({.order = 4, .regularity = 0, .resolution = 8}));
    CHECK_THROWS(Basis::build({.order = 11, .regularity = 0, .resolution = 14}));
    // derivatives beyond what the filter supports must fail loudly
    CHECK_THROWS(Basis::build({.order = 2, .regularity = 2, .resolution = 12}));
}

TEST_CASE("first derivative table agrees with finite differences of the function") {
    Basis b = Basis::build({.order = 5, .regularity = 1, .resolution = 12});
    double h = 1e-4;
    for (double t : {1.3, 2.7, 4.1, 5.9}) {
        double fd = (b.scaling(t + h) - b.scaling(t - h)) / (2 * h);
        CHECK(b.scaling(t, 1) == doctest::Approx(fd).epsilon(5e-3));
    }
    CHECK_THROWS(b.scaling(2.0, 2));
}

TEST_CASE("enumerate_indices level 0 matches support-intersection arithmetic") {
    const Basis& b = basis14();
    auto list = enumerate_indices(b, 0, 1, 1.0);
    int w = static_cast<int>(b.support_length());
    int expect = 1 + w + 1 - (-1); // k in [-1-w, 1] intersected arithmetic below
    int kmin = static_cast<int>(std::ceil(-1.0)) - w;
    int kmax = 1;
    expect = kmax - kmin + 1;
    CHECK(static_cast<int>(list.size()) == expect);
    for (const auto& idx : list) CHECK(rect_intersects_ball(support_rect(b, idx), 1.0));
}

TEST_CASE("enumerate_indices cardinality bound at level 3") {
    const Basis& b = basis14();
    auto list = enumerate_indices(b, 3, 1, 1.0);
    double C = b.support_length() / 2.0;
    double bound = (C + 2.0) * 1.0 * std::ldexp(1.0, 3); // C_L^dagger * R * 2^{jd}
    CHECK(static_cast<double>(list.size()) <= bound);
}

TEST_CASE("enumerate_indices d=2 equals exhaustive shift scan") {
    const Basis& b = basis14();
    auto list = enumerate_indices(b, 2, 2, 1.0);
    // independent brute-force scan over a generous bounding box
    int w = static_cast<int>(b.support_length());
    double s = 2.0; // 2^{j-1}
    std::size_t count = 0;
    for (int k1 = -40; k1 <= 40; ++k1) {
        for (int k2 = -40; k2 <= 40; ++k2) {
            double lo1 = k1 / s, hi1 = (k1 + w) / s;
            double lo2 = k2 / s, hi2 = (k2 + w) / s;
            double d1 = lo1 > 0 ? lo1 : (hi1 < 0 ? -hi1 : 0.0);
            double d2 = lo2 > 0 ? lo2 : (hi2 < 0 ? -hi2 : 0.0);
            if (d1 * d1 + d2 * d2 <= 1.0) count += 3; // 2^2-1 types
        }
    }
    CHECK(list.size() == count);
}

TEST_CASE("coefficient of constant function") {
    const Basis& b = basis14();
    auto one = [](std::span<const double>) { return 1.0; };
    Index scal{.level = 0, .type = 0, .shift = {0}};
    CHECK(function_coefficient(b, scal, one, 12) == doctest::Approx(1.0).epsilon(1e-6));
    Index moth{.level = 2, .type = 1, .shift = {-1}};
    CHECK(std::abs(function_coefficient(b, moth, one, 12)) < 1e-6);
}

TEST_CASE("coefficient of sin matches refined independent quadrature") {
    const Basis& b = basis14();
    Index idx{.level = 4, .type = 1, .shift = {-3}};
    auto f = [](std::span<const double> x) { return std::sin(x[0]); };
    double got = function_coefficient(b, idx, f, 12);
    // oracle: trapezoid rule on a finer grid, independent traversal
    Rect r = support_rect(b, idx);
    std::size_t M = 1u << 18;
    double lo = r.lo[0], hi = r.hi[0];
    double h = (hi - lo) / static_cast<double>(M);
    double acc = 0;
    for (std::size_t m = 0; m <= M; ++m) {
        double x = lo + static_cast<double>(m) * h;
        double wgt = (m == 0 || m == M) ? 0.5 : 1.0;
        double xs[1] = {x};
        acc += wgt * std::sin(x) * evaluate(b, idx, xs);
    }
    acc *= h;
    CHECK(got == doctest::Approx(acc).epsilon(0).scale(1).epsilon(1e-6));
    CHECK(std::abs(got - acc) < 1e-6);
}

TEST_CASE("empirical coefficient handles out-of-support points silently") {
    const Basis& b = basis14();
    Index idx{.level = 1, .type = 1, .shift = {0}};
    std::vector<std::vector<double>> pts = {{0.5}, {1e9}, {-1e9}};
    std::vector<double> wts = {0.5, 0.25, 0.25};
    double v = empirical_coefficient(b, idx, pts, wts);
    double xs[1] = {0.5};
    CHECK(v == doctest::Approx(0.5 * evaluate(b, idx, xs)));
}

TEST_CASE("reconstruction of the constant via level-0 partition") {
    const Basis& b = basis14();
    CoeffMap coeffs;
    for (int k = -12; k <= 12; ++k)
        coeffs[Index{.level = 0, .type = 0, .shift = {k}}] = 1.0; // <1, phi(.-k)> = 1
    for (double x : {-0.4, -0.1, 0.0, 0.3, 0.49}) {
        double xs[1] = {x};
        CHECK(truncated_reconstruction(b, coeffs, 0, xs) == doctest::Approx(1.0).epsilon(1e-6));
    }
    CoeffMap zeros;
    for (int k = -3; k <= 3; ++k) zeros[Index{.level = 0, .type = 0, .shift = {k}}] = 0.0;
    double xs[1] = {0.2};
    CHECK(truncated_reconstruction(b, zeros, 5, xs) == 0.0);
}

TEST_CASE("reconstruction error of cos(2x) shrinks with the level") {
    const Basis& b = basis14();
    auto f = [](std::span<const double> x) { return std::cos(2.0 * x[0]); };
    auto sup_err = [&](int J) {
        CoeffMap coeffs;
        for (int j = 0; j <= J; ++j)
            for (const auto& idx : enumerate_indices(b, j, 1, 3.0))
                coeffs[idx] = function_coefficient(b, idx, f, 10);
        double worst = 0;
        for (int m = -20; m <= 20; ++m) {
            double x = 0.025 * m;
            double xs[1] = {x};
            worst = std::max(worst, std::abs(truncated_reconstruction(b, coeffs, J, xs) - std::cos(2 * x)));
        }
        return worst;
    };
    double e2 = sup_err(2), e3 = sup_err(3);
    CHECK(e2 / e3 >= 1.5);
}

TEST_CASE("orthonormality across levels by dyadic quadrature") {
    const Basis& b = basis14();
    Rng rng(20240811);
    std::vector<Index> pool;
    for (int j = 0; j <= 5; ++j) {
        auto lvl = enumerate_indices(b, j, 1, 1.0);
        pool.insert(pool.end(), lvl.begin(), lvl.end());
    }
    for (int t = 0; t < 150; ++t) {
        const Index& a = pool[rng.index(pool.size())];
        const Index& c = pool[rng.index(pool.size())];
        double expect = (a == c) ? 1.0 : 0.0;
        CHECK(std::abs(inner_product(b, a, c) - expect) <= 1e-5);
    }
}

TEST_CASE("coefficient decay for a Lipschitz test function") {
    const Basis& b = basis14();
    // piecewise-linear, kinks at dyadically generic points; H^1 norm = sup|f| + sup|f'|
    auto f = [](std::span<const double> xx) {
        double x = xx[0];
        double v = 1.0 - std::abs(x - 0.37) - 0.5 * std::abs(x + 0.29);
        return std::max(0.0, v);
    };
    double prev_scaled = -1;
    double lo = 1e300, hi = 0;
    for (int j = 1; j <= 6; ++j) {
        double worst = 0;
        for (const auto& idx : enumerate_indices(b, j, 1, 1.0))
            worst = std::max(worst, std::abs(function_coefficient(b, idx, f, 10)));
        double scaled = worst * std::pow(2.0, 1.5 * j);
        lo = std::min(lo, scaled);
        hi = std::max(hi, scaled);
        prev_scaled = scaled;
    }
    (void)prev_scaled;
    CHECK(hi / lo <= 4.0);
}

TEST_CASE("locality: exactly zero outside the support rectangle") {
    const Basis& b = basis14();
    Index idx{.level = 3, .type = 1, .shift = {2}};
    Rect r = support_rect(b, idx);
    double xs[1] = {r.hi[0] + 1e-9};
    CHECK(evaluate(b, idx, xs) == 0.0);
    xs[0] = r.lo[0] - 1e-9;
    CHECK(evaluate(b, idx, xs) == 0.0);
    CHECK(r.diameter() <= 2.0 * b.support_length() * std::pow(2.0, -idx.level));
}

TEST_CASE("truncated Parseval sums increase and stay below the energy") {
    const Basis& b = basis14();
    auto f = [](std::span<const double> x) { return std::exp(-4.0 * x[0] * x[0]); };
    double energy = 0;
    {
        std::size_t M = 1u << 16;
        double h = 6.0 / static_cast<double>(M);
        for (std::size_t m = 0; m < M; ++m) {
            double x = -3.0 + (static_cast<double>(m) + 0.5) * h;
            energy += std::exp(-8.0 * x * x) * h;
        }
    }
    double prev = 0;
    for (int J = 0; J <= 4; ++J) {
        double sum = prev;
        for (const auto& idx : enumerate_indices(b, J, 1, 3.0)) {
            double c = function_coefficient(b, idx, f, 9);
            sum += c * c;
        }
        CHECK(sum >= prev - 1e-12);
        CHECK(sum <= energy + 1e-3);
        prev = sum;
    }
}

TEST_CASE("index embedding lands in the unit cube with level-scaled separation") {
    const Basis& b = basis14();
    for (int j : {1, 3}) {
        auto list = enumerate_indices(b, j, 2, 1.0);
        double min_sep = 1e300;
        for (std::size_t a = 0; a < list.size(); ++a) {
            auto ea = index_embedding(b, list[a], 1.0);
            REQUIRE(ea.size() == 3);
            for (double v : ea) {
                CHECK(v >= 0.0);
                CHECK(v <= 1.0);
            }
            for (std::size_t c = a + 1; c < std::min(list.size(), a + 40); ++c) {
                auto ec = index_embedding(b, list[c], 1.0);
                double d2 = 0;
                for (std::size_t i = 0; i < ea.size(); ++i) d2 += (ea[i] - ec[i]) * (ea[i] - ec[i]);
                min_sep = std::min(min_sep, std::sqrt(d2));
            }
        }
        CHECK(min_sep > 0.01 * std::pow(2.0, -j));
    }
}

TEST_CASE("filter file round trip drives the same basis") {
    const auto& taps = daubechies_filter(3);
    std::string path = "tmp_filter_taps.txt";
    {
        std::ofstream out(path);
        out << "# taps\n";
        char buf[40];
        for (double t : taps) {
            std::snprintf(buf, sizeof(buf), "%.17g\n", t);
            out << buf;
        }
    }
    Basis from_file = Basis::build({.order = 3, .regularity = 0, .resolution = 12, .filter_file = path});
    Basis embedded = Basis::build({.order = 3, .regularity = 0, .resolution = 12});
    for (double t : {0.4, 1.9, 3.3, 4.7})
        CHECK(from_file.scaling(t) == doctest::Approx(embedded.scaling(t)).epsilon(1e-14));
    std::remove(path.c_str());
}
