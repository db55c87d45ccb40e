#pragma once

#include "distreg/dataset.hpp"
#include "distreg/wavelet.hpp"

#include <cstdint>
#include <span>
#include <vector>

namespace distreg::synthetic {

// (1-t)^{beta+1} t^{beta+1} on (0,1), 0 elsewhere
double bump_k(double t, double beta);
// zero-mean variant (1-t)^{s+1} t^{s+1} (t - 1/2) on (0,1)
double bump_ktilde(double t, double s);

// (z, sqrt(2 - |z|^2), 0_{D-d-1}); domain error when |z| > 1
std::vector<double> sphere_chart(std::span<const double> z, int d_y, int D_y);

// ---------------------------------------------------------------------------
// Euclidean-response conditional densities: product baseline plus a grid of
// zero-mean bumps with binary signs.
struct BumpDensityConfig {
    int D_Y = 1;
    int d_X = 1;
    int D_X = 1;
    double alpha_Y = 1.0;
    double alpha_X = 1.0;
    double gamma = 1.0;
    int m1 = 4; // response-axis bump grid
    int m2 = 2; // covariate-axis bump grid
    double amplitude_scale = 0.0; // <= 0: largest value passing the positivity check
};

class BumpDensityGenerator {
public:
    BumpDensityGenerator(BumpDensityConfig cfg, std::vector<std::uint8_t> omega);
    static BumpDensityGenerator with_random_signs(const BumpDensityConfig& cfg, std::uint64_t seed);

    const BumpDensityConfig& config() const { return cfg_; }
    const std::vector<std::uint8_t>& omega() const { return omega_; }
    double amplitude() const { return amplitude_; }

    double baseline(std::span<const double> y) const;
    double density(std::span<const double> y, std::span<const double> x) const;

    Dataset sample(std::size_t n, std::uint64_t seed) const;

    // exact wavelet coefficients of density(.|x), levels 0..J; bump integrals
    // are cached per index so repeated x evaluations are cheap
    wavelet::CoeffMap coefficients(std::span<const double> x, const wavelet::Basis& basis,
                                   int J, double radius) const;

private:
    double bump_field(std::span<const double> y, std::span<const double> x) const;
    // flattened active covariate cell and its factor value; {npos, 0} when none
    std::pair<std::size_t, double> active_covariate_cell(std::span<const double> x) const;

    BumpDensityConfig cfg_;
    std::vector<std::uint8_t> omega_;
    double amplitude_ = 0.0;
    double smooth_s_ = 0.0;    // alpha_Y v alpha_X v gamma
    double base_a_ = 0.0;      // alpha_Y v gamma
    double axis_norm_ = 1.0;   // per-axis baseline normalizer
    double sup_ktilde_ = 0.0;
    int valid_cell_lo_ = 1, valid_cell_hi_ = 0; // response-axis cells kept active
    double base_min_ = 0.0;    // baseline minimum over the bump region
    double envelope_ = 1.0;    // rejection constant
    std::vector<double> cdf_grid_, cdf_val_; // per-axis baseline inverse CDF table
    mutable wavelet::CoeffMap base_coeffs_;
    mutable int base_coeffs_J_ = -1;
    // per wavelet index: (flattened xi1 cell, integral of psi * bump product)
    mutable std::unordered_map<wavelet::Index, std::vector<std::pair<std::size_t, double>>,
                               wavelet::IndexHash>
        bump_cache_;
};

// ---------------------------------------------------------------------------
// Covariate-dependent manifold family: sphere chart plus multi-bump
// perturbation glued to the spherical cap.
struct ManifoldFamilyConfig {
    int d_Y = 1;
    int D_Y = 3;
    int d_X = 1;
    int D_X = 1;
    double beta_Y = 2.0;
    double beta_X = 2.0;
    int m1 = 3;
    int m2 = 2;
    double amplitude_scale = 1.0; // multiplies m1^{-beta_Y}
};

class ManifoldFamilyGenerator {
public:
    ManifoldFamilyGenerator(ManifoldFamilyConfig cfg, std::vector<std::uint8_t> omega);
    static ManifoldFamilyGenerator with_random_signs(const ManifoldFamilyConfig& cfg,
                                                     std::uint64_t seed);

    const ManifoldFamilyConfig& config() const { return cfg_; }
    double multibump(std::span<const double> z, std::span<const double> x) const; // g_omega
    std::vector<double> chart(std::span<const double> z, std::span<const double> x) const;
    double chart_mass_fraction() const { return chart_fraction_; } // Ctilde / C

    Dataset sample(std::size_t n, std::uint64_t seed) const;
    std::vector<std::vector<double>> ground_truth_manifold(std::span<const double> x,
                                                           int resolution) const;

private:
    ManifoldFamilyConfig cfg_;
    std::vector<std::uint8_t> omega_;
    double amplitude_ = 0.0;
    double chart_fraction_ = 0.0;
    std::vector<double> latent_cdf_r_, latent_cdf_v_; // radius inverse CDF for nu0
    std::vector<double> cap_cdf_t_, cap_cdf_v_;       // polar-angle inverse CDF on the cap
};

// ---------------------------------------------------------------------------
// Convenience family: circle of radius 1 + amp * sin(pi x) in the plane.
struct CircleFamilyConfig {
    double base_radius = 1.0;
    double amp = 0.2;
};

class CircleFamilyGenerator {
public:
    explicit CircleFamilyGenerator(CircleFamilyConfig cfg = {}) : cfg_(cfg) {}
    double radius(double x) const;
    Dataset sample(std::size_t n, std::uint64_t seed) const;
    std::vector<std::vector<double>> truth_cloud(double x, int resolution) const;

private:
    CircleFamilyConfig cfg_;
};

} // namespace distreg::synthetic
