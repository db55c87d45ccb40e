#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "distreg/harness.hpp"
#include "distreg/rng.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>

using namespace distreg;
using namespace distreg::harness;

TEST_CASE("theoretical exponents match the regime rate terms") {
    ExperimentConfig r1;
    r1.regime = RegimeTag::Regime1;
    r1.gammas = {1.0};
    CHECK(theoretical_exponent(r1) == doctest::Approx(1.0 / 3.0));

    ExperimentConfig mr;
    mr.regime = RegimeTag::ManifoldReg;
    mr.beta_Y = mr.beta_X = 2.0;
    CHECK(theoretical_exponent(mr) == doctest::Approx(1.0));

    ExperimentConfig r2;
    r2.regime = RegimeTag::Regime2;
    r2.gammas = {0.1};
    r2.beta_Y = 2.0;
    CHECK(theoretical_exponent(r2) == doctest::Approx(0.2));
}

TEST_CASE("log-log slope fitting") {
    std::vector<std::pair<double, double>> pts;
    for (double n : {512.0, 1024.0, 2048.0, 4096.0, 8192.0})
        pts.emplace_back(n, 3.7 * std::pow(n, -1.0 / 3.0));
    auto fit = fit_loglog_slope(pts);
    REQUIRE(fit.defined);
    CHECK(fit.slope == doctest::Approx(-1.0 / 3.0).epsilon(1e-10));
    CHECK(fit.stderr_value <= 1e-10);

    std::vector<std::pair<double, double>> flat;
    for (double n : {512.0, 1024.0, 2048.0}) flat.emplace_back(n, 0.25);
    CHECK(fit_loglog_slope(flat).slope == doctest::Approx(0.0));

    Rng rng(2);
    std::vector<std::pair<double, double>> noisy;
    for (double n : {512.0, 1024.0, 2048.0, 4096.0, 8192.0})
        noisy.emplace_back(n, std::pow(n, -0.5) * rng.uniform(0.9, 1.1));
    auto nf = fit_loglog_slope(noisy);
    CHECK(std::abs(nf.slope + 0.5) <= 0.1);

    std::vector<std::pair<double, double>> bad = {{512.0, 0.1}, {1024.0, -1.0}, {2048.0, 0.05}};
    auto bf = fit_loglog_slope(bad);
    CHECK(bf.dropped == 1);
    CHECK(!bf.defined); // only two positive rows remain
}

TEST_CASE("config parsing, overrides, and validation") {
    std::string path = "tmp_exp_config.txt";
    {
        std::ofstream out(path);
        out << "# sample config\n";
        out << "regime = 1\n";
        out << "alpha_X = 1.5\n";
        out << "gamma = 0.5,1.0\n";
        out << "n_grid = 128,256\n";
        out << "replicates = 3\n";
        out << "basis.order = 6\n";
    }
    auto kv = parse_config_file(path);
    std::remove(path.c_str());
    apply_override(kv, "replicates=5");
    apply_override(kv, "L=1.25");
    auto cfg = config_from_kv(kv);
    CHECK(cfg.regime == RegimeTag::Regime1);
    CHECK(cfg.alpha_X == doctest::Approx(1.5));
    CHECK(cfg.gammas.size() == 2);
    CHECK(cfg.replicates == 5);
    CHECK(cfg.basis_order == 6);
    CHECK(cfg.L == doctest::Approx(1.25));
    CHECK(cfg.L_set);

    auto bad = kv;
    bad["n_grid"] = "256,128";
    CHECK_THROWS(config_from_kv(bad));
    bad = kv;
    bad["replicates"] = "0";
    CHECK_THROWS(config_from_kv(bad));
    bad = kv;
    bad["gamma"] = "-1";
    CHECK_THROWS(config_from_kv(bad));
    bad = kv;
    bad["regime"] = "7";
    CHECK_THROWS(config_from_kv(bad));
}

TEST_CASE("single-cell experiment flags the undefined slope") {
    ExperimentConfig cfg;
    cfg.regime = RegimeTag::Regime1;
    cfg.n_grid = {256};
    cfg.replicates = 1;
    cfg.eval_draws = 8;
    cfg.basis_resolution = 12;
    cfg.threads = 1;
    auto table = run_rate_experiment(cfg);
    CHECK(table.rows.size() == 1);
    CHECK(!table.slope.defined);
    CHECK(std::isfinite(table.rows[0].error));
}

TEST_CASE("experiments are deterministic and resumable") {
    ExperimentConfig cfg;
    cfg.regime = RegimeTag::Regime1;
    cfg.n_grid = {256, 512, 1024};
    cfg.replicates = 2;
    cfg.eval_draws = 8;
    cfg.basis_resolution = 12;
    cfg.seed = 99;
    cfg.threads = 2;
    auto a = run_rate_experiment(cfg);
    auto b = run_rate_experiment(cfg);
    REQUIRE(a.rows.size() == b.rows.size());
    for (std::size_t i = 0; i < a.rows.size(); ++i) {
        CHECK(a.rows[i].n == b.rows[i].n);
        CHECK(a.rows[i].replicate == b.rows[i].replicate);
        CHECK(a.rows[i].seed == b.rows[i].seed);
        CHECK(a.rows[i].error == b.rows[i].error); // bit-identical
    }

    std::string rows_csv = "tmp_rate_rows.csv";
    write_rate_outputs(a, rows_csv, "tmp_rate_summary.csv", "tmp_rate.dat");
    auto parsed = read_rate_rows(rows_csv);
    REQUIRE(parsed.size() == a.rows.size());
    for (std::size_t i = 0; i < parsed.size(); ++i) {
        CHECK(parsed[i].error == a.rows[i].error);
        CHECK(parsed[i].seed == a.rows[i].seed);
    }
    // resume: everything already present, so the rerun keeps the same rows
    auto resumed = run_rate_experiment(cfg, rows_csv);
    REQUIRE(resumed.rows.size() == a.rows.size());
    for (std::size_t i = 0; i < resumed.rows.size(); ++i)
        CHECK(resumed.rows[i].error == a.rows[i].error);
    std::remove(rows_csv.c_str());
    std::remove("tmp_rate_summary.csv");
    std::remove("tmp_rate.dat");
}

TEST_CASE("generated datasets carry the configured shapes") {
    ExperimentConfig cfg;
    cfg.regime = RegimeTag::Regime1;
    auto d1 = generate_dataset(cfg, 50, 1);
    CHECK(d1.size() == 50);
    CHECK(d1.x_dim == 1);
    CHECK(d1.y_dim == 1);

    cfg.regime = RegimeTag::Regime2;
    cfg.D_Y = 3;
    auto d2 = generate_dataset(cfg, 20, 1);
    CHECK(d2.y_dim == 3);

    cfg.regime = RegimeTag::ManifoldReg;
    auto d3 = generate_dataset(cfg, 20, 1);
    CHECK(d3.y_dim == 2);
}

TEST_CASE("latent bundle round trip preserves evaluations") {
    ExperimentConfig cfg;
    cfg.regime = RegimeTag::Regime2;
    cfg.D_Y = 3;
    cfg.tau2 = 0.4;
    cfg.override_J = 1;
    auto data = generate_dataset(cfg, 600, 7);
    auto lc = cfg.latent_config();
    lc.override_J = 1;
    auto ambient = wavelet::Basis::build(lc.ambient_basis);
    auto chart_basis = wavelet::Basis::build(lc.chart_basis);
    LatentBundle bundle;
    bundle.mixture = latent::fit_mixture(data, lc, chart_basis);
    for (int j = 0; j <= 1; ++j)
        bundle.joint_means.push_back(latent::fit_joint_mean(j, data, lc, ambient));

    std::string path = "tmp_latent_bundle.txt";
    save_latent_bundle(bundle, path);
    auto loaded = load_latent_bundle(path);
    std::remove(path.c_str());

    REQUIRE(loaded.joint_means.size() == bundle.joint_means.size());
    REQUIRE(loaded.mixture.charts.size() == bundle.mixture.charts.size());
    double x[1] = {0.25};
    for (std::size_t j = 0; j < bundle.joint_means.size(); ++j) {
        const auto& jm = bundle.joint_means[j];
        for (std::size_t c = 0; c < std::min<std::size_t>(jm.cells.size(), 10); ++c) {
            double a = jm.eval(ambient, jm.cells[c].idx, x);
            double b = loaded.joint_means[j].eval(ambient, jm.cells[c].idx, x);
            CHECK(a == b);
        }
    }
    if (!bundle.mixture.charts.empty()) {
        double z[1] = {0.1};
        CHECK(bundle.mixture.latent_density(0, z, x, chart_basis) ==
              loaded.mixture.latent_density(0, z, x, chart_basis));
        wavelet::CoeffMap f;
        f[wavelet::Index{.level = 2, .type = 1, .shift = {-1, 0, -1}}] = 0.6;
        double a = latent::mixture_fine_term(bundle.mixture, ambient, chart_basis, f, x);
        double b = latent::mixture_fine_term(loaded.mixture, ambient, chart_basis, f, x);
        CHECK(a == b);
    }
}
