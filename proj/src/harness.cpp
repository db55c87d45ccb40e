#include "distreg/harness.hpp"

#include "distreg/ipm.hpp"
#include "distreg/linalg.hpp"
#include "distreg/manifold_reg.hpp"
#include "distreg/regime1.hpp"
#include "distreg/rng.hpp"
#include "distreg/synthetic.hpp"

#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <stdexcept>
#include <thread>

namespace distreg::harness {

latent::LatentConfig ExperimentConfig::latent_config() const {
    latent::LatentConfig lc;
    lc.d_Y = d_Y;
    lc.D_Y = D_Y;
    lc.d_X = d_X;
    lc.D_X = D_X;
    lc.alpha_Y = alpha_Y;
    lc.alpha_X = alpha_X;
    lc.beta_Y = beta_Y;
    lc.beta_X = beta_X;
    lc.L = L_set ? L : 1.6;
    lc.tau2 = tau2;
    lc.C1 = C1;
    lc.cap_scale = C;
    lc.L1 = L1;
    lc.override_J = override_J;
    lc.x_dependent_charts = regime == RegimeTag::Regime3;
    lc.ambient_basis = {.order = ambient_order, .regularity = 1, .resolution = ambient_resolution};
    lc.chart_basis = {.order = basis_order, .regularity = 1, .resolution = basis_resolution};
    return lc;
}

std::map<std::string, std::string> parse_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config: " + path);
    std::map<std::string, std::string> kv;
    std::string line;
    while (std::getline(in, line)) {
        auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        auto eq = line.find('=');
        if (eq == std::string::npos) continue;
        auto trim = [](std::string s) {
            std::size_t a = s.find_first_not_of(" \t\r");
            std::size_t b = s.find_last_not_of(" \t\r");
            return a == std::string::npos ? std::string() : s.substr(a, b - a + 1);
        };
        std::string key = trim(line.substr(0, eq));
        std::string value = trim(line.substr(eq + 1));
        if (!key.empty()) kv[key] = value;
    }
    return kv;
}

void apply_override(std::map<std::string, std::string>& kv, const std::string& assignment) {
    auto eq = assignment.find('=');
    if (eq == std::string::npos)
        throw std::invalid_argument("override must look like key=value: " + assignment);
    kv[assignment.substr(0, eq)] = assignment.substr(eq + 1);
}

namespace {

std::vector<double> parse_list(const std::string& s) {
    std::vector<double> out;
    std::stringstream ss(s);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
        if (!cell.empty()) out.push_back(std::stod(cell));
    }
    return out;
}

} // namespace

ExperimentConfig config_from_kv(const std::map<std::string, std::string>& kv) {
    ExperimentConfig cfg;
    auto get = [&](const char* key) -> const std::string* {
        auto it = kv.find(key);
        return it == kv.end() ? nullptr : &it->second;
    };
    if (auto* v = get("regime")) {
        if (*v == "1") cfg.regime = RegimeTag::Regime1;
        else if (*v == "2") cfg.regime = RegimeTag::Regime2;
        else if (*v == "3") cfg.regime = RegimeTag::Regime3;
        else if (*v == "manifold-reg" || *v == "manifold" || *v == "0")
            cfg.regime = RegimeTag::ManifoldReg;
        else throw std::invalid_argument("unknown regime tag: " + *v);
    }
    auto geti = [&](const char* k, int& slot) { if (auto* v = get(k)) slot = std::stoi(*v); };
    auto getd = [&](const char* k, double& slot) { if (auto* v = get(k)) slot = std::stod(*v); };
    geti("D_Y", cfg.D_Y);
    geti("d_Y", cfg.d_Y);
    geti("D_X", cfg.D_X);
    geti("d_X", cfg.d_X);
    getd("alpha_Y", cfg.alpha_Y);
    getd("alpha_X", cfg.alpha_X);
    getd("beta_Y", cfg.beta_Y);
    getd("beta_X", cfg.beta_X);
    if (auto* v = get("gamma")) cfg.gammas = parse_list(*v);
    if (auto* v = get("n_grid")) {
        cfg.n_grid.clear();
        for (double n : parse_list(*v)) cfg.n_grid.push_back(static_cast<std::size_t>(n));
        for (std::size_t i = 1; i < cfg.n_grid.size(); ++i)
            if (cfg.n_grid[i] <= cfg.n_grid[i - 1])
                throw std::invalid_argument("n_grid must be strictly increasing");
    }
    geti("replicates", cfg.replicates);
    if (cfg.replicates < 1) throw std::invalid_argument("replicates must be >= 1");
    if (auto* v = get("seed")) cfg.seed = std::stoull(*v);
    geti("m1", cfg.m1);
    geti("m2", cfg.m2);
    getd("amplitude_scale", cfg.amplitude_scale);
    if (auto* v = get("randomize_omega")) cfg.randomize_omega = (*v == "1" || *v == "true");
    getd("circle_amp", cfg.circle_amp);
    getd("b1", cfg.b1);
    getd("b2", cfg.b2);
    getd("C", cfg.C);
    getd("C1", cfg.C1);
    getd("L1", cfg.L1);
    getd("tau2", cfg.tau2);
    if (auto* v = get("L")) {
        cfg.L = std::stod(*v);
        cfg.L_set = true;
    }
    getd("window_log_factor", cfg.window_log_factor);
    geti("basis.order", cfg.basis_order);
    geti("basis.resolution", cfg.basis_resolution);
    geti("ambient.order", cfg.ambient_order);
    geti("ambient.resolution", cfg.ambient_resolution);
    geti("x_grid", cfg.x_grid);
    geti("eval_draws", cfg.eval_draws);
    geti("eval_level", cfg.eval_level);
    geti("truth_cloud_res", cfg.truth_cloud_res);
    geti("override_J", cfg.override_J);
    if (auto* v = get("outdir")) cfg.outdir = *v;
    geti("threads", cfg.threads);
    for (double g : cfg.gammas)
        if (g < 0) throw std::invalid_argument("gamma must be >= 0");
    return cfg;
}

double theoretical_exponent(const ExperimentConfig& cfg) {
    double g = cfg.gammas.empty() ? 1.0 : cfg.gammas.front();
    double mean_term = cfg.alpha_X / (2.0 * cfg.alpha_X + cfg.d_X);
    switch (cfg.regime) {
        case RegimeTag::Regime1: {
            double density = (cfg.alpha_Y + g) /
                             (2.0 * cfg.alpha_Y + cfg.D_Y + cfg.d_X * cfg.alpha_Y / cfg.alpha_X);
            return std::min(mean_term, density);
        }
        case RegimeTag::Regime2: {
            double density = (cfg.alpha_Y + g) /
                             (2.0 * cfg.alpha_Y + cfg.d_Y + cfg.d_X * cfg.alpha_Y / cfg.alpha_X);
            double support = g * cfg.beta_Y / cfg.d_Y;
            return std::min({mean_term, density, support});
        }
        case RegimeTag::Regime3: {
            double density = (cfg.alpha_Y + g) /
                             (2.0 * cfg.alpha_Y + cfg.d_Y + cfg.d_X * cfg.alpha_Y / cfg.alpha_X);
            double support = g / (cfg.d_Y / cfg.beta_Y + cfg.d_X / cfg.beta_X);
            return std::min({mean_term, density, support});
        }
        case RegimeTag::ManifoldReg:
            return 1.0 / (cfg.d_Y / cfg.beta_Y + cfg.d_X / cfg.beta_X);
    }
    return 0.0;
}

SlopeFit fit_loglog_slope(const std::vector<std::pair<double, double>>& n_vs_error) {
    SlopeFit fit;
    std::vector<std::pair<double, double>> pts;
    for (const auto& [n, e] : n_vs_error) {
        if (!(e > 0.0) || !std::isfinite(e)) {
            ++fit.dropped;
            continue;
        }
        pts.emplace_back(std::log(n), std::log(e));
    }
    if (pts.size() < 3) return fit; // undefined-slope flag stays false
    double sx = 0, sy = 0;
    for (auto& [x, y] : pts) {
        sx += x;
        sy += y;
    }
    double mx = sx / pts.size(), my = sy / pts.size();
    double sxx = 0, sxy = 0;
    for (auto& [x, y] : pts) {
        sxx += (x - mx) * (x - mx);
        sxy += (x - mx) * (y - my);
    }
    if (sxx <= 0) return fit;
    fit.slope = sxy / sxx;
    double rss = 0;
    for (auto& [x, y] : pts) {
        double r = y - my - fit.slope * (x - mx);
        rss += r * r;
    }
    fit.stderr_value = pts.size() > 2 ? std::sqrt(rss / (pts.size() - 2) / sxx) : 0.0;
    fit.defined = true;
    return fit;
}

namespace {

synthetic::BumpDensityConfig bump_config(const ExperimentConfig& cfg) {
    return {.D_Y = cfg.D_Y,
            .d_X = cfg.d_X,
            .D_X = cfg.D_X,
            .alpha_Y = cfg.alpha_Y,
            .alpha_X = cfg.alpha_X,
            .gamma = cfg.gammas.empty() ? 1.0 : cfg.gammas.front(),
            .m1 = cfg.m1,
            .m2 = cfg.m2,
            .amplitude_scale = cfg.amplitude_scale};
}

synthetic::ManifoldFamilyConfig manifold_config(const ExperimentConfig& cfg) {
    return {.d_Y = cfg.d_Y,
            .D_Y = cfg.D_Y,
            .d_X = cfg.d_X,
            .D_X = cfg.D_X,
            .beta_Y = cfg.beta_Y,
            .beta_X = cfg.beta_X,
            .m1 = cfg.m1,
            .m2 = cfg.m2,
            .amplitude_scale = 1.0};
}

} // namespace

synthetic::ManifoldFamilyGenerator manifold_generator(const ExperimentConfig& cfg,
                                                      std::uint64_t seed) {
    auto mcfg = manifold_config(cfg);
    bool randomize = cfg.regime == RegimeTag::Regime3 && cfg.randomize_omega;
    if (randomize) return synthetic::ManifoldFamilyGenerator::with_random_signs(mcfg, seed);
    std::size_t need = 1;
    for (int i = 0; i < mcfg.d_Y; ++i) need *= static_cast<std::size_t>(mcfg.m1);
    for (int i = 0; i < mcfg.d_X; ++i) need *= static_cast<std::size_t>(mcfg.m2);
    return synthetic::ManifoldFamilyGenerator(mcfg, std::vector<std::uint8_t>(need, 0));
}

// conditional-mean coefficients E[psi(Y)|x] of the manifold family by
// one-dimensional quadrature over the chart latent and the cap angle
wavelet::CoeffMap manifold_truth_coefficients(const synthetic::ManifoldFamilyGenerator& gen,
                                              const wavelet::Basis& basis, int J, double radius,
                                              std::span<const double> x) {
    const auto& mc = gen.config();
    if (mc.d_Y != 1) throw std::invalid_argument("manifold truth quadrature implemented for d_Y=1");
    const double frac = gen.chart_mass_fraction();
    const double sqrt2 = std::sqrt(2.0);
    const int M = 1024;
    // latent baseline nu0(z) ~ sqrt(2)/sqrt(2-z^2), normalized on (-1,1)
    std::vector<double> zs(M), nu(M);
    double znorm = 0;
    for (int i = 0; i < M; ++i) {
        zs[static_cast<std::size_t>(i)] = -1.0 + (i + 0.5) * (2.0 / M);
        nu[static_cast<std::size_t>(i)] =
            sqrt2 / std::sqrt(2.0 - zs[static_cast<std::size_t>(i)] * zs[static_cast<std::size_t>(i)]);
        znorm += nu[static_cast<std::size_t>(i)];
    }
    for (auto& v : nu) v /= znorm;
    const double pi = 3.14159265358979323846;
    std::vector<std::vector<double>> chart_pts(M), cap_pts(2 * M);
    for (int i = 0; i < M; ++i) {
        double z[1] = {zs[static_cast<std::size_t>(i)]};
        chart_pts[static_cast<std::size_t>(i)] = gen.chart(z, x);
    }
    for (int i = 0; i < M; ++i) {
        double t = pi / 4.0 + (pi - pi / 4.0) * (i + 0.5) / M;
        for (int sgn = 0; sgn < 2; ++sgn) {
            std::vector<double> p(static_cast<std::size_t>(mc.D_Y), 0.0);
            p[0] = (sgn ? -1.0 : 1.0) * sqrt2 * std::sin(t);
            p[1] = sqrt2 * std::cos(t);
            cap_pts[static_cast<std::size_t>(2 * i + sgn)] = std::move(p);
        }
    }
    double bump_sup = std::pow(2.0, -mc.beta_Y * std::log2(static_cast<double>(mc.m1))) + 0.05;

    wavelet::CoeffMap out;
    for (int j = 0; j <= J; ++j) {
        for (const auto& idx : wavelet::enumerate_indices(basis, j, mc.D_Y, radius)) {
            auto rect = wavelet::support_rect(basis, idx);
            // prune to the sphere shell
            double dmin2 = 0, dmax2 = 0;
            for (std::size_t a = 0; a < rect.lo.size(); ++a) {
                double lo = rect.lo[a], hi = rect.hi[a];
                double nearest = lo > 0 ? lo : (hi < 0 ? -hi : 0.0);
                double farthest = std::max(std::abs(lo), std::abs(hi));
                dmin2 += nearest * nearest;
                dmax2 += farthest * farthest;
            }
            if (std::sqrt(dmin2) > sqrt2 + bump_sup || std::sqrt(dmax2) < sqrt2 - bump_sup)
                continue;
            double chart_part = 0;
            for (int i = 0; i < M; ++i)
                chart_part += wavelet::evaluate(basis, idx, chart_pts[static_cast<std::size_t>(i)]) *
                              nu[static_cast<std::size_t>(i)];
            double cap_part = 0;
            for (const auto& p : cap_pts) cap_part += wavelet::evaluate(basis, idx, p);
            cap_part /= static_cast<double>(cap_pts.size());
            double v = frac * chart_part + (1.0 - frac) * cap_part;
            if (v != 0.0) out[idx] = v;
        }
    }
    return out;
}

wavelet::CoeffMap joint_mean_coefficients(const std::vector<latent::JointMeanModel>& jms,
                                          const wavelet::Basis& basis, int D_Y, int d_Y,
                                          std::span<const double> x) {
    wavelet::CoeffMap est;
    for (const auto& jm : jms) {
        double scale = std::pow(2.0, 0.5 * (D_Y - d_Y) * jm.level);
        for (const auto& cell : jm.cells) {
            double v = scale * jm.eval(basis, cell.idx, x);
            if (v != 0.0) est[cell.idx] = v;
        }
    }
    return est;
}

Dataset generate_dataset(const ExperimentConfig& cfg, std::size_t n, std::uint64_t seed) {
    switch (cfg.regime) {
        case RegimeTag::Regime1: {
            auto gen = cfg.randomize_omega
                           ? synthetic::BumpDensityGenerator::with_random_signs(bump_config(cfg), seed)
                           : synthetic::BumpDensityGenerator(
                                 bump_config(cfg),
                                 std::vector<std::uint8_t>(
                                     static_cast<std::size_t>(std::pow(cfg.m1, cfg.D_Y) *
                                                              std::pow(cfg.m2, cfg.d_X)),
                                     0));
            return gen.sample(n, seed + 1);
        }
        case RegimeTag::Regime2:
        case RegimeTag::Regime3:
            return manifold_generator(cfg, seed).sample(n, seed + 1);
        case RegimeTag::ManifoldReg: {
            synthetic::CircleFamilyGenerator gen({.base_radius = 1.0, .amp = cfg.circle_amp});
            return gen.sample(n, seed + 1);
        }
    }
    throw std::logic_error("unreachable");
}

double evaluate_replicate(const ExperimentConfig& cfg, std::size_t n, std::uint64_t seed) {
    double gamma = cfg.gammas.empty() ? 1.0 : cfg.gammas.front();
    switch (cfg.regime) {
        case RegimeTag::Regime1: {
            auto gen = synthetic::BumpDensityGenerator::with_random_signs(bump_config(cfg), seed);
            auto data = gen.sample(n, seed + 1);
            regime1::Regime1Config rcfg;
            rcfg.alpha_Y = cfg.alpha_Y;
            rcfg.alpha_X = cfg.alpha_X;
            rcfg.D_Y = cfg.D_Y;
            rcfg.d_X = cfg.d_X;
            rcfg.L = cfg.L;
            rcfg.cap_scale = cfg.C;
            rcfg.basis = {.order = cfg.basis_order, .regularity = 1, .resolution = cfg.basis_resolution};
            rcfg.override_J = cfg.override_J;
            auto model = regime1::Regime1Model::fit(data, rcfg);
            int J_eval = evaluation_level(cfg, cfg.D_Y);
            Rng xr(seed + 2, 0xe7a1);
            std::vector<std::vector<double>> draws;
            for (int t = 0; t < cfg.eval_draws; ++t) {
                std::vector<double> x(static_cast<std::size_t>(cfg.D_X), 0.0);
                for (int a = 0; a < cfg.d_X; ++a) x[static_cast<std::size_t>(a)] = xr.uniform();
                draws.push_back(std::move(x));
            }
            return ipm::expected_conditional_ipm(
                [&](std::span<const double> x) { return model.coefficients(x); },
                [&](std::span<const double> x) {
                    return gen.coefficients(x, model.basis(), J_eval, cfg.L);
                },
                draws, gamma, J_eval, cfg.D_Y);
        }
        case RegimeTag::Regime2:
        case RegimeTag::Regime3: {
            auto gen = manifold_generator(cfg, seed);
            auto data = gen.sample(n, seed + 1);
            auto lc = cfg.latent_config();
            auto ambient = wavelet::Basis::build(lc.ambient_basis);
            int J = lc.override_J >= 0
                        ? lc.override_J
                        : regime1::truncation_level(n, cfg.alpha_Y, cfg.alpha_X, cfg.d_Y, cfg.d_X);
            int J_eval = evaluation_level(cfg, cfg.d_Y);
            std::vector<latent::JointMeanModel> jms;
            for (int j = 0; j <= J; ++j) jms.push_back(latent::fit_joint_mean(j, data, lc, ambient));

            // coarse density coefficients vs exact conditional means
            Rng xr(seed + 2, 0xe7a1);
            bool x_free_truth = cfg.regime == RegimeTag::Regime2;
            wavelet::CoeffMap truth_cache;
            bool have_cache = false;
            double err = 0;
            for (int t = 0; t < cfg.eval_draws; ++t) {
                std::vector<double> x(static_cast<std::size_t>(cfg.D_X), 0.0);
                for (int a = 0; a < cfg.d_X; ++a) x[static_cast<std::size_t>(a)] = xr.uniform(-1.0, 1.0);
                wavelet::CoeffMap est = joint_mean_coefficients(jms, ambient, cfg.D_Y, cfg.d_Y, x);
                if (!have_cache || !x_free_truth) {
                    truth_cache = manifold_truth_coefficients(gen, ambient, J_eval, lc.L, x);
                    have_cache = true;
                }
                err += ipm::besov_ipm_maps(est, truth_cache, gamma, J_eval, cfg.D_Y);
            }
            return err / cfg.eval_draws;
        }
        case RegimeTag::ManifoldReg: {
            synthetic::CircleFamilyGenerator gen({.base_radius = 1.0, .amp = cfg.circle_amp});
            auto data = gen.sample(n, seed + 1);
            manifold_reg::ManifoldRegConfig mcfg;
            mcfg.d_Y = cfg.d_Y;
            mcfg.d_X = cfg.d_X;
            mcfg.beta_Y = cfg.beta_Y;
            mcfg.beta_X = cfg.beta_X;
            mcfg.b1 = cfg.b1;
            mcfg.b2 = cfg.b2;
            mcfg.cap = cfg.L1;
            mcfg.window_log_factor = cfg.window_log_factor;
            auto model = manifold_reg::ManifoldRegModel::fit(data, mcfg);
            int res = std::max(16, static_cast<int>(std::ceil(5.0 / model.h1())));
            double worst = 0;
            for (int ix = 0; ix < cfg.x_grid; ++ix) {
                double x[1] = {-0.9 + 1.8 * ix / std::max(1, cfg.x_grid - 1)};
                auto pred = model.predict(x, res);
                if (!pred.covered || pred.cloud.empty())
                    return std::numeric_limits<double>::quiet_NaN();
                auto truth = gen.truth_cloud(x[0], cfg.truth_cloud_res);
                worst = std::max(worst, manifold_reg::hausdorff(pred.cloud, truth));
            }
            return worst;
        }
    }
    throw std::logic_error("unreachable");
}

RateTable run_rate_experiment(const ExperimentConfig& cfg, const std::string& resume_rows_csv) {
    RateTable table;
    table.theory_exponent = theoretical_exponent(cfg);

    std::vector<RateRow> done;
    if (!resume_rows_csv.empty()) {
        try {
            done = read_rate_rows(resume_rows_csv);
        } catch (const std::exception&) {
            done.clear();
        }
    }
    auto already = [&](std::size_t n, int rep) {
        for (const auto& r : done)
            if (r.n == n && r.replicate == rep) return true;
        return false;
    };

    struct Task {
        std::size_t n;
        int rep;
        std::uint64_t seed;
    };
    std::vector<Task> tasks;
    for (std::size_t n : cfg.n_grid)
        for (int rep = 0; rep < cfg.replicates; ++rep) {
            if (already(n, rep)) continue;
            std::uint64_t s = Rng::mix(cfg.seed ^ Rng::mix(n * 1315423911ull + static_cast<std::uint64_t>(rep)));
            tasks.push_back({n, rep, s});
        }

    std::vector<RateRow> fresh(tasks.size());
    std::atomic<std::size_t> next{0};
    int nthreads = cfg.threads > 0 ? cfg.threads
                                   : std::max(1u, std::thread::hardware_concurrency());
    auto worker = [&]() {
        for (;;) {
            std::size_t t = next.fetch_add(1);
            if (t >= tasks.size()) return;
            const Task& task = tasks[t];
            RateRow row;
            row.n = task.n;
            row.replicate = task.rep;
            row.seed = task.seed;
            auto t0 = std::chrono::steady_clock::now();
            try {
                row.error = evaluate_replicate(cfg, task.n, task.seed);
            } catch (const std::exception& e) {
                std::cerr << "replicate n=" << task.n << " rep=" << task.rep
                          << " failed: " << e.what() << "\n";
                row.error = std::numeric_limits<double>::quiet_NaN();
            }
            row.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
            fresh[t] = row;
        }
    };
    std::vector<std::thread> pool;
    for (int i = 1; i < nthreads; ++i) pool.emplace_back(worker);
    worker();
    for (auto& th : pool) th.join();

    table.rows = std::move(done);
    table.rows.insert(table.rows.end(), fresh.begin(), fresh.end());
    std::sort(table.rows.begin(), table.rows.end(), [](const RateRow& a, const RateRow& b) {
        return a.n != b.n ? a.n < b.n : a.replicate < b.replicate;
    });

    for (std::size_t n : cfg.n_grid) {
        std::vector<double> errs;
        for (const auto& r : table.rows)
            if (r.n == n && std::isfinite(r.error)) errs.push_back(r.error);
        if (errs.empty()) continue;
        std::sort(errs.begin(), errs.end());
        table.medians.emplace_back(n, errs[errs.size() / 2]);
    }
    std::vector<std::pair<double, double>> pts;
    for (const auto& [n, e] : table.medians) pts.emplace_back(static_cast<double>(n), e);
    table.slope = fit_loglog_slope(pts);
    return table;
}

void write_rate_outputs(const RateTable& table, const std::string& rows_csv,
                        const std::string& summary_csv, const std::string& dat_path) {
    {
        std::ofstream out(rows_csv);
        if (!out) throw std::runtime_error("cannot open for write: " + rows_csv);
        out << "n,replicate,seed,error,seconds\n";
        char buf[128];
        for (const auto& r : table.rows) {
            std::snprintf(buf, sizeof(buf), "%zu,%d,%llu,%.17g,%.6f\n", r.n, r.replicate,
                          static_cast<unsigned long long>(r.seed), r.error, r.seconds);
            out << buf;
        }
    }
    {
        std::ofstream out(summary_csv);
        if (!out) throw std::runtime_error("cannot open for write: " + summary_csv);
        out << "n,median_error,slope,slope_stderr,theory_exponent\n";
        char buf[160];
        for (const auto& [n, med] : table.medians) {
            std::snprintf(buf, sizeof(buf), "%zu,%.17g,%.17g,%.17g,%.17g\n", n, med,
                          table.slope.defined ? table.slope.slope : std::nan(""),
                          table.slope.defined ? table.slope.stderr_value : std::nan(""),
                          table.theory_exponent);
            out << buf;
        }
    }
    if (!dat_path.empty()) {
        std::ofstream out(dat_path);
        if (!out) throw std::runtime_error("cannot open for write: " + dat_path);
        out << "# n median_error\n";
        char buf[80];
        for (const auto& [n, med] : table.medians) {
            std::snprintf(buf, sizeof(buf), "%zu %.17g\n", n, med);
            out << buf;
        }
    }
}

std::vector<RateRow> read_rate_rows(const std::string& rows_csv) {
    std::ifstream in(rows_csv);
    if (!in) throw std::runtime_error("cannot open for read: " + rows_csv);
    std::vector<RateRow> rows;
    std::string line;
    std::getline(in, line); // header
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        RateRow r;
        unsigned long long seed = 0;
        if (std::sscanf(line.c_str(), "%zu,%d,%llu,%lf,%lf", &r.n, &r.replicate, &seed, &r.error,
                        &r.seconds) == 5) {
            r.seed = seed;
            rows.push_back(r);
        }
    }
    return rows;
}

// ---------------------------------------------------------------------------
// latent bundle serialization

namespace {

void put(std::ofstream& out, double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    out << buf;
}

void write_index(std::ofstream& out, const wavelet::Index& idx) {
    out << idx.level << ' ' << idx.type << ' ' << idx.shift.size();
    for (int k : idx.shift) out << ' ' << k;
}

wavelet::Index read_index(std::ifstream& in) {
    wavelet::Index idx;
    std::size_t d;
    in >> idx.level >> idx.type >> d;
    idx.shift.resize(d);
    for (auto& k : idx.shift) in >> k;
    return idx;
}

void write_localpoly(std::ofstream& out, const smoothers::LocalPolyModel& m) {
    out << m.centers.size() << ' ' << (m.centers.empty() ? 0 : m.centers[0].size()) << ' '
        << m.powers.size() << ' ';
    put(out, m.bandwidth);
    out << ' ';
    put(out, m.floor_term);
    out << ' ';
    put(out, m.cap);
    out << '\n';
    for (const auto& c : m.centers) {
        for (std::size_t a = 0; a < c.size(); ++a) {
            if (a) out << ' ';
            put(out, c[a]);
        }
        out << '\n';
    }
    for (const auto& p : m.powers) {
        for (std::size_t a = 0; a < p.size(); ++a) {
            if (a) out << ' ';
            out << p[a];
        }
        out << '\n';
    }
    for (std::size_t a = 0; a < m.coef.size(); ++a) {
        if (a) out << ' ';
        put(out, m.coef[a]);
    }
    out << '\n';
}

smoothers::LocalPolyModel read_localpoly(std::ifstream& in) {
    smoothers::LocalPolyModel m;
    std::size_t W, dim, P;
    in >> W >> dim >> P >> m.bandwidth >> m.floor_term >> m.cap;
    m.centers.assign(W, std::vector<double>(dim));
    for (auto& c : m.centers)
        for (auto& v : c) in >> v;
    m.powers.assign(P, std::vector<int>(dim));
    for (auto& p : m.powers)
        for (auto& v : p) in >> v;
    m.coef.resize(W * P);
    for (auto& v : m.coef) in >> v;
    return m;
}

} // namespace

void save_latent_bundle(const LatentBundle& bundle, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open for write: " + path);
    const auto& cfg = bundle.mixture.cfg;
    out << "latent-bundle 1\n";
    out << "config " << cfg.d_Y << ' ' << cfg.D_Y << ' ' << cfg.d_X << ' ' << cfg.D_X << ' ';
    put(out, cfg.alpha_Y);
    out << ' ';
    put(out, cfg.alpha_X);
    out << ' ';
    put(out, cfg.beta_Y);
    out << ' ';
    put(out, cfg.beta_X);
    out << ' ';
    put(out, cfg.L);
    out << ' ';
    put(out, cfg.tau2);
    out << ' ';
    put(out, cfg.C1);
    out << ' ';
    put(out, cfg.C2);
    out << ' ';
    put(out, cfg.C3);
    out << ' ';
    put(out, cfg.cap_scale);
    out << ' ';
    put(out, cfg.L1);
    out << ' ' << cfg.J1_cap << ' ' << cfg.J2_cap << ' ' << cfg.override_J << ' ' << cfg.quad_res
        << ' ' << (cfg.x_dependent_charts ? 1 : 0) << ' ' << cfg.chart_max_iter << ' ';
    put(out, cfg.chart_tol);
    out << ' ' << cfg.ambient_basis.order << ' ' << cfg.ambient_basis.regularity << ' '
        << cfg.ambient_basis.resolution << ' ' << cfg.chart_basis.order << ' '
        << cfg.chart_basis.regularity << ' ' << cfg.chart_basis.resolution << '\n';
    out << "fit " << bundle.mixture.J << ' ' << bundle.mixture.n << '\n';

    out << "jointmeans " << bundle.joint_means.size() << '\n';
    for (const auto& jm : bundle.joint_means) {
        out << "jm " << jm.level << ' ';
        put(out, jm.eps_y);
        out << ' ';
        put(out, jm.eps_x);
        out << ' ';
        put(out, jm.cap);
        out << ' ';
        put(out, jm.floor_term);
        out << ' ';
        put(out, jm.radius);
        out << ' ' << jm.e_centers.size() << ' '
            << (jm.e_centers.empty() ? 0 : jm.e_centers[0].size()) << ' ' << jm.b_centers.size()
            << ' ' << (jm.b_centers.empty() ? 0 : jm.b_centers[0].size()) << ' '
            << jm.powers.size() << ' ' << jm.cells.size() << '\n';
        for (const auto& c : jm.e_centers) {
            for (std::size_t a = 0; a < c.size(); ++a) {
                if (a) out << ' ';
                put(out, c[a]);
            }
            out << '\n';
        }
        for (const auto& c : jm.b_centers) {
            for (std::size_t a = 0; a < c.size(); ++a) {
                if (a) out << ' ';
                put(out, c[a]);
            }
            out << '\n';
        }
        for (const auto& p : jm.powers) {
            for (std::size_t a = 0; a < p.size(); ++a) {
                if (a) out << ' ';
                out << p[a];
            }
            out << '\n';
        }
        for (std::size_t a = 0; a < jm.coef.size(); ++a) {
            if (a) out << ' ';
            put(out, jm.coef[a]);
        }
        out << '\n';
        for (const auto& cell : jm.cells) {
            out << "cell ";
            write_index(out, cell.idx);
            out << ' ';
            put(out, cell.Sy);
            out << ' ' << cell.yw.size();
            for (const auto& [e, w] : cell.yw) {
                out << ' ' << e << ' ';
                put(out, w);
            }
            out << '\n';
        }
    }

    out << "charts " << bundle.mixture.charts.size() << '\n';
    for (const auto& ch : bundle.mixture.charts) {
        out << "chart " << ch.center_index << ' ' << ch.window_count << ' ';
        put(out, ch.objective);
        out << '\n';
        out << "xk";
        for (double v : ch.xk) {
            out << ' ';
            put(out, v);
        }
        out << "\nyk";
        for (double v : ch.yk) {
            out << ' ';
            put(out, v);
        }
        out << '\n';
        out << "frame " << ch.frame.rows() << ' ' << ch.frame.cols() << '\n';
        for (long r = 0; r < ch.frame.rows(); ++r) {
            for (long c = 0; c < ch.frame.cols(); ++c) {
                if (c) out << ' ';
                put(out, ch.frame(r, c));
            }
            out << '\n';
        }
        out << "decoder " << ch.coeffs.size() << '\n';
        for (const auto& [idx, g] : ch.coeffs) {
            write_index(out, idx);
            for (long c = 0; c < g.size(); ++c) {
                out << ' ';
                put(out, g(c));
            }
            out << '\n';
        }
        out << "decoder_x " << ch.coeffs_x.size() << '\n';
        for (const auto& [pair, g] : ch.coeffs_x) {
            write_index(out, pair.first);
            out << ' ';
            write_index(out, pair.second);
            for (long c = 0; c < g.size(); ++c) {
                out << ' ';
                put(out, g(c));
            }
            out << '\n';
        }
    }
    out << "tables " << bundle.mixture.latent_tables.size() << '\n';
    for (const auto& table : bundle.mixture.latent_tables) {
        out << "table " << table.size() << '\n';
        for (const auto& [idx, lp] : table) {
            out << "entry ";
            write_index(out, idx);
            out << '\n';
            write_localpoly(out, lp);
        }
    }
}

LatentBundle load_latent_bundle(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open for read: " + path);
    std::string tag;
    int version;
    in >> tag >> version;
    if (tag != "latent-bundle") throw std::runtime_error("not a latent bundle: " + path);
    LatentBundle bundle;
    auto& cfg = bundle.mixture.cfg;
    int xdep;
    in >> tag >> cfg.d_Y >> cfg.D_Y >> cfg.d_X >> cfg.D_X >> cfg.alpha_Y >> cfg.alpha_X >>
        cfg.beta_Y >> cfg.beta_X >> cfg.L >> cfg.tau2 >> cfg.C1 >> cfg.C2 >> cfg.C3 >>
        cfg.cap_scale >> cfg.L1 >> cfg.J1_cap >> cfg.J2_cap >> cfg.override_J >> cfg.quad_res >>
        xdep >> cfg.chart_max_iter >> cfg.chart_tol >> cfg.ambient_basis.order >>
        cfg.ambient_basis.regularity >> cfg.ambient_basis.resolution >> cfg.chart_basis.order >>
        cfg.chart_basis.regularity >> cfg.chart_basis.resolution;
    cfg.x_dependent_charts = xdep != 0;
    in >> tag >> bundle.mixture.J >> bundle.mixture.n;

    std::size_t count;
    in >> tag >> count;
    for (std::size_t t = 0; t < count; ++t) {
        latent::JointMeanModel jm;
        std::size_t E, edim, B, bdim, P, ncells;
        in >> tag >> jm.level >> jm.eps_y >> jm.eps_x >> jm.cap >> jm.floor_term >> jm.radius >>
            E >> edim >> B >> bdim >> P >> ncells;
        jm.e_centers.assign(E, std::vector<double>(edim));
        for (auto& c : jm.e_centers)
            for (auto& v : c) in >> v;
        jm.b_centers.assign(B, std::vector<double>(bdim));
        for (auto& c : jm.b_centers)
            for (auto& v : c) in >> v;
        jm.powers.assign(P, std::vector<int>(bdim));
        for (auto& p : jm.powers)
            for (auto& v : p) in >> v;
        jm.coef.resize(E * B * P);
        for (auto& v : jm.coef) in >> v;
        for (std::size_t c = 0; c < ncells; ++c) {
            latent::JointMeanModel::CellInfo cell;
            in >> tag;
            cell.idx = read_index(in);
            std::size_t nw;
            in >> cell.Sy >> nw;
            cell.yw.resize(nw);
            for (auto& [e, w] : cell.yw) in >> e >> w;
            jm.cells.push_back(std::move(cell));
        }
        jm.rebuild_lookup();
        bundle.joint_means.push_back(std::move(jm));
    }

    in >> tag >> count;
    for (std::size_t t = 0; t < count; ++t) {
        latent::Chart ch;
        ch.active = true;
        in >> tag >> ch.center_index >> ch.window_count >> ch.objective;
        std::string line;
        std::getline(in, line);
        auto read_vec = [&](std::vector<double>& v) {
            std::getline(in, line);
            std::stringstream ss(line);
            std::string name;
            ss >> name;
            double val;
            while (ss >> val) v.push_back(val);
        };
        read_vec(ch.xk);
        read_vec(ch.yk);
        long R, C;
        in >> tag >> R >> C;
        ch.frame.resize(R, C);
        for (long r = 0; r < R; ++r)
            for (long c = 0; c < C; ++c) in >> ch.frame(r, c);
        std::size_t nd;
        in >> tag >> nd;
        for (std::size_t p = 0; p < nd; ++p) {
            auto idx = read_index(in);
            Eigen::VectorXd g(R);
            for (long c = 0; c < R; ++c) in >> g(c);
            ch.coeffs.emplace_back(std::move(idx), std::move(g));
        }
        in >> tag >> nd;
        for (std::size_t p = 0; p < nd; ++p) {
            auto z = read_index(in);
            auto xw = read_index(in);
            Eigen::VectorXd g(R);
            for (long c = 0; c < R; ++c) in >> g(c);
            ch.coeffs_x.emplace_back(std::make_pair(std::move(z), std::move(xw)), std::move(g));
        }
        bundle.mixture.charts.push_back(std::move(ch));
    }
    in >> tag >> count;
    bundle.mixture.latent_tables.resize(count);
    for (std::size_t t = 0; t < count; ++t) {
        std::size_t entries;
        in >> tag >> entries;
        for (std::size_t e = 0; e < entries; ++e) {
            in >> tag;
            auto idx = read_index(in);
            bundle.mixture.latent_tables[t].emplace_back(idx, read_localpoly(in));
        }
    }
    bundle.mixture.grid = latent::covering_grid(cfg.L, cfg.tau2, cfg.D_X, cfg.D_Y);
    return bundle;
}

} // namespace distreg::harness
