// Command-line front end: generate synthetic datasets, fit the estimators,
// evaluate errors, sweep sample sizes, and compare point clouds.

#include <CLI11.hpp>

#include "distreg/harness.hpp"
#include "distreg/ipm.hpp"
#include "distreg/manifold_reg.hpp"
#include "distreg/regime1.hpp"
#include "distreg/rng.hpp"
#include "distreg/synthetic.hpp"

#include <cstdio>
#include <filesystem>
#include <iostream>

using namespace distreg;
using harness::ExperimentConfig;
using harness::RegimeTag;

namespace {

ExperimentConfig load_config(const std::string& path, const std::vector<std::string>& sets) {
    std::map<std::string, std::string> kv;
    if (!path.empty()) kv = harness::parse_config_file(path);
    for (const auto& s : sets) harness::apply_override(kv, s);
    return harness::config_from_kv(kv);
}

regime1::Regime1Config regime1_config(const ExperimentConfig& cfg) {
    regime1::Regime1Config rcfg;
    rcfg.alpha_Y = cfg.alpha_Y;
    rcfg.alpha_X = cfg.alpha_X;
    rcfg.D_Y = cfg.D_Y;
    rcfg.d_X = cfg.d_X;
    rcfg.L = cfg.L;
    rcfg.cap_scale = cfg.C;
    rcfg.basis = {.order = cfg.basis_order, .regularity = 1, .resolution = cfg.basis_resolution};
    rcfg.override_J = cfg.override_J;
    return rcfg;
}

manifold_reg::ManifoldRegConfig manifold_config(const ExperimentConfig& cfg) {
    manifold_reg::ManifoldRegConfig mcfg;
    mcfg.d_Y = cfg.d_Y;
    mcfg.d_X = cfg.d_X;
    mcfg.beta_Y = cfg.beta_Y;
    mcfg.beta_X = cfg.beta_X;
    mcfg.b1 = cfg.b1;
    mcfg.b2 = cfg.b2;
    mcfg.cap = cfg.L1;
    mcfg.window_log_factor = cfg.window_log_factor;
    return mcfg;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"distribution regression estimators and rate experiments"};
    app.require_subcommand(1);

    std::string config_path, out_path, data_path, model_path, resume_path;
    std::vector<std::string> sets;
    std::size_t n = 1024;
    std::uint64_t seed = 1;

    auto add_common = [&](CLI::App* cmd) {
        cmd->add_option("--config", config_path, "config file (key = value lines)");
        cmd->add_option("--set", sets, "override config entries as key=value")->take_all();
    };

    auto* gen = app.add_subcommand("generate", "sample a synthetic dataset to CSV");
    add_common(gen);
    gen->add_option("--n", n, "sample count");
    gen->add_option("--seed", seed, "generator seed");
    gen->add_option("--out", out_path, "output CSV")->required();

    auto* fit = app.add_subcommand("fit", "fit the configured estimator and save the model");
    add_common(fit);
    fit->add_option("--data", data_path, "dataset CSV")->required();
    fit->add_option("--out", out_path, "model file")->required();

    auto* eval = app.add_subcommand("eval", "evaluate a fitted model against the exact truth");
    add_common(eval);
    eval->add_option("--model", model_path, "model file")->required();
    eval->add_option("--seed", seed, "seed that generated the truth");

    auto* rates = app.add_subcommand("rates", "full sample-size sweep with rate-slope summary");
    add_common(rates);
    rates->add_option("--resume", resume_path, "existing rows CSV; finished rows are skipped");

    std::string cloud_a, cloud_b;
    auto* hd = app.add_subcommand("hausdorff", "distance between two point-cloud CSVs");
    hd->add_option("--a", cloud_a, "first cloud CSV")->required();
    hd->add_option("--b", cloud_b, "second cloud CSV")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (gen->parsed()) {
            auto cfg = load_config(config_path, sets);
            auto data = harness::generate_dataset(cfg, n, seed);
            write_csv(data, out_path);
            std::printf("wrote %zu samples to %s\n", data.size(), out_path.c_str());
        } else if (fit->parsed()) {
            auto cfg = load_config(config_path, sets);
            auto data = read_csv(data_path);
            switch (cfg.regime) {
                case RegimeTag::Regime1: {
                    auto model = regime1::Regime1Model::fit(data, regime1_config(cfg));
                    model.save(out_path);
                    std::printf("regime-1 model: J=%d, %zu indices -> %s\n", model.level_cap(),
                                model.stored_indices(), out_path.c_str());
                    break;
                }
                case RegimeTag::Regime2:
                case RegimeTag::Regime3: {
                    auto lc = cfg.latent_config();
                    auto ambient = wavelet::Basis::build(lc.ambient_basis);
                    auto chart_basis = wavelet::Basis::build(lc.chart_basis);
                    harness::LatentBundle bundle;
                    bundle.mixture = latent::fit_mixture(data, lc, chart_basis);
                    for (int j = 0; j <= bundle.mixture.J; ++j)
                        bundle.joint_means.push_back(latent::fit_joint_mean(j, data, lc, ambient));
                    harness::save_latent_bundle(bundle, out_path);
                    std::printf("latent bundle: J=%d, %zu charts -> %s\n", bundle.mixture.J,
                                bundle.mixture.charts.size(), out_path.c_str());
                    break;
                }
                case RegimeTag::ManifoldReg: {
                    auto model = manifold_reg::ManifoldRegModel::fit(data, manifold_config(cfg));
                    model.save(out_path);
                    std::size_t active = 0;
                    for (const auto& p : model.patches()) active += p.active ? 1 : 0;
                    std::printf("manifold model: %zu/%zu active patches -> %s\n", active,
                                model.patches().size(), out_path.c_str());
                    break;
                }
            }
        } else if (eval->parsed()) {
            auto cfg = load_config(config_path, sets);
            double gamma = cfg.gammas.empty() ? 1.0 : cfg.gammas.front();
            Rng xr(seed + 2, 0xe7a1);
            switch (cfg.regime) {
                case RegimeTag::Regime1: {
                    auto model = regime1::Regime1Model::load(model_path);
                    auto bump = synthetic::BumpDensityGenerator::with_random_signs(
                        {.D_Y = cfg.D_Y,
                         .d_X = cfg.d_X,
                         .D_X = cfg.D_X,
                         .alpha_Y = cfg.alpha_Y,
                         .alpha_X = cfg.alpha_X,
                         .gamma = gamma,
                         .m1 = cfg.m1,
                         .m2 = cfg.m2,
                         .amplitude_scale = cfg.amplitude_scale},
                        seed);
                    int J = model.level_cap();
                    std::vector<std::vector<double>> draws;
                    for (int t = 0; t < cfg.eval_draws; ++t) {
                        std::vector<double> x(static_cast<std::size_t>(cfg.D_X), 0.0);
                        for (int a = 0; a < cfg.d_X; ++a) x[static_cast<std::size_t>(a)] = xr.uniform();
                        draws.push_back(std::move(x));
                    }
                    double err = ipm::expected_conditional_ipm(
                        [&](std::span<const double> x) { return model.coefficients(x); },
                        [&](std::span<const double> x) {
                            return bump.coefficients(x, model.basis(), J, cfg.L);
                        },
                        draws, gamma, J, cfg.D_Y);
                    std::printf("expected besov-IPM error: %.8g\n", err);
                    break;
                }
                case RegimeTag::Regime2:
                case RegimeTag::Regime3: {
                    auto bundle = harness::load_latent_bundle(model_path);
                    auto ambient = wavelet::Basis::build(bundle.mixture.cfg.ambient_basis);
                    auto gen = harness::manifold_generator(cfg, seed);
                    int J = bundle.mixture.J;
                    double err = 0;
                    wavelet::CoeffMap truth;
                    bool cached = false;
                    for (int t = 0; t < cfg.eval_draws; ++t) {
                        std::vector<double> x(static_cast<std::size_t>(cfg.D_X), 0.0);
                        for (int a = 0; a < cfg.d_X; ++a)
                            x[static_cast<std::size_t>(a)] = xr.uniform(-1.0, 1.0);
                        auto est = harness::joint_mean_coefficients(bundle.joint_means, ambient,
                                                                    cfg.D_Y, cfg.d_Y, x);
                        if (!cached || cfg.regime == RegimeTag::Regime3) {
                            truth = harness::manifold_truth_coefficients(
                                gen, ambient, J, bundle.mixture.cfg.L, x);
                            cached = true;
                        }
                        err += ipm::besov_ipm_maps(est, truth, gamma, J, cfg.D_Y);
                    }
                    std::printf("expected besov-IPM error: %.8g\n", err / cfg.eval_draws);
                    break;
                }
                case RegimeTag::ManifoldReg: {
                    auto model = manifold_reg::ManifoldRegModel::load(model_path);
                    synthetic::CircleFamilyGenerator circle({.base_radius = 1.0, .amp = cfg.circle_amp});
                    int res = std::max(16, static_cast<int>(std::ceil(5.0 / model.h1())));
                    double worst = 0;
                    for (int ix = 0; ix < cfg.x_grid; ++ix) {
                        double x[1] = {-0.9 + 1.8 * ix / std::max(1, cfg.x_grid - 1)};
                        auto pred = model.predict(x, res);
                        if (!pred.covered) {
                            std::printf("uncovered covariate at x=%.3f\n", x[0]);
                            return 2;
                        }
                        auto truth = circle.truth_cloud(x[0], cfg.truth_cloud_res);
                        worst = std::max(worst, manifold_reg::hausdorff(pred.cloud, truth));
                    }
                    std::printf("sup-over-x Hausdorff error: %.8g\n", worst);
                    break;
                }
            }
        } else if (rates->parsed()) {
            auto cfg = load_config(config_path, sets);
            auto table = harness::run_rate_experiment(cfg, resume_path);
            std::filesystem::create_directories(cfg.outdir);
            std::string rows = cfg.outdir + "/rates.csv";
            std::string summary = cfg.outdir + "/rates_summary.csv";
            std::string dat = cfg.outdir + "/rates.dat";
            harness::write_rate_outputs(table, rows, summary, dat);
            for (const auto& [nn, med] : table.medians)
                std::printf("n=%zu median_error=%.6g\n", nn, med);
            if (table.slope.defined)
                std::printf("slope=%.4f (stderr %.4f), theory exponent %.4f\n", table.slope.slope,
                            table.slope.stderr_value, table.theory_exponent);
            else
                std::printf("slope undefined (%zu rows dropped); theory exponent %.4f\n",
                            table.slope.dropped, table.theory_exponent);
            std::printf("wrote %s, %s, %s\n", rows.c_str(), summary.c_str(), dat.c_str());
        } else if (hd->parsed()) {
            auto A = read_cloud_csv(cloud_a);
            auto B = read_cloud_csv(cloud_b);
            std::printf("hausdorff: %.10g\n", manifold_reg::hausdorff(A, B));
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
