#pragma once

#include "distreg/dataset.hpp"
#include "distreg/latent.hpp"
#include "distreg/synthetic.hpp"

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace distreg::harness {

enum class RegimeTag { ManifoldReg = 0, Regime1 = 1, Regime2 = 2, Regime3 = 3 };

struct ExperimentConfig {
    RegimeTag regime = RegimeTag::Regime1;
    int D_Y = 1, d_Y = 1, D_X = 1, d_X = 1;
    double alpha_Y = 1.0, alpha_X = 1.0, beta_Y = 2.0, beta_X = 2.0;
    std::vector<double> gammas = {1.0};
    std::vector<std::size_t> n_grid = {512, 1024, 2048, 4096, 8192};
    int replicates = 20;
    std::uint64_t seed = 1;
    // generators
    int m1 = 4, m2 = 2;
    double amplitude_scale = 0.0; // <= 0: auto
    bool randomize_omega = true;
    double circle_amp = 0.2;
    // constants
    double b1 = 3.0, b2 = 3.0;
    double C = 10.0, C1 = 8.0, L1 = 10.0, tau2 = 0.25;
    double L = 1.05; // response/covering radius (regimes 2-3 default to 1.6 when unset)
    bool L_set = false;
    double window_log_factor = 1.0;
    int basis_order = 4, basis_resolution = 14;
    int ambient_order = 2, ambient_resolution = 12;
    int x_grid = 16;
    int eval_draws = 64;
    // comparison truncation for the besov error; < 0: one level above the
    // schedule at the largest n in the grid (fixed across the sweep)
    int eval_level = -1;
    int truth_cloud_res = 720;
    int override_J = -1;
    std::string outdir = ".";
    int threads = 0; // 0: hardware concurrency

    latent::LatentConfig latent_config() const;
};

std::map<std::string, std::string> parse_config_file(const std::string& path);
// "key=value" override, as taken by --set
void apply_override(std::map<std::string, std::string>& kv, const std::string& assignment);
ExperimentConfig config_from_kv(const std::map<std::string, std::string>& kv);

// dominant (slowest) rate exponent for the configured regime and gammas.front()
double theoretical_exponent(const ExperimentConfig& cfg);

struct RateRow {
    std::size_t n = 0;
    int replicate = 0;
    std::uint64_t seed = 0;
    double error = 0.0; // NaN when the replicate failed
    double seconds = 0.0;
};

struct SlopeFit {
    double slope = 0.0;
    double stderr_value = 0.0;
    bool defined = false;
    std::size_t dropped = 0;
};

struct RateTable {
    std::vector<RateRow> rows;
    std::vector<std::pair<std::size_t, double>> medians; // per n
    SlopeFit slope;
    double theory_exponent = 0.0;
};

// OLS of log(median error) on log n; nonpositive errors dropped with a count
SlopeFit fit_loglog_slope(const std::vector<std::pair<double, double>>& n_vs_error);

Dataset generate_dataset(const ExperimentConfig& cfg, std::size_t n, std::uint64_t seed);

// manifold-family generator as the rate experiment builds it (omega fixed to
// zero for the covariate-independent regime, seeded signs otherwise)
synthetic::ManifoldFamilyGenerator manifold_generator(const ExperimentConfig& cfg,
                                                      std::uint64_t seed);
// exact conditional-mean coefficients E[psi(Y)|x] for that family
wavelet::CoeffMap manifold_truth_coefficients(const synthetic::ManifoldFamilyGenerator& gen,
                                              const wavelet::Basis& basis, int J, double radius,
                                              std::span<const double> x);
// coarse density coefficients of a fitted joint-mean stack at x
wavelet::CoeffMap joint_mean_coefficients(const std::vector<latent::JointMeanModel>& jms,
                                          const wavelet::Basis& basis, int D_Y, int d_Y,
                                          std::span<const double> x);
// one full row: generate, fit, evaluate the configured error
double evaluate_replicate(const ExperimentConfig& cfg, std::size_t n, std::uint64_t seed);

RateTable run_rate_experiment(const ExperimentConfig& cfg, const std::string& resume_rows_csv = "");
void write_rate_outputs(const RateTable& table, const std::string& rows_csv,
                        const std::string& summary_csv, const std::string& dat_path);
std::vector<RateRow> read_rate_rows(const std::string& rows_csv);

// fitted-model bundle for the covariate-dependent regimes (joint means +
// mixture), serialized as structured text
struct LatentBundle {
    std::vector<latent::JointMeanModel> joint_means;
    latent::MixtureModel mixture;
};
void save_latent_bundle(const LatentBundle& bundle, const std::string& path);
LatentBundle load_latent_bundle(const std::string& path);

} // namespace distreg::harness
