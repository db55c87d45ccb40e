#pragma once

#include "distreg/dataset.hpp"
#include "distreg/smoothers.hpp"
#include "distreg/wavelet.hpp"

#include <Eigen/Dense>
#include <cstdint>
#include <span>
#include <vector>

namespace distreg::latent {

struct LatentConfig {
    int d_Y = 1;
    int D_Y = 3;
    int d_X = 1;
    int D_X = 1;
    double alpha_Y = 1.0;
    double alpha_X = 1.0;
    double beta_Y = 2.0;
    double beta_X = 2.0;
    double L = 1.6;      // radius of the joint covering region
    double tau2 = 0.25;  // chart scale
    double C1 = 8.0;     // eps_j^y = 2^{-j} / C1
    double C2 = 3.0;     // covariate center budget W_j' = C2 eps^{-d_X}
    double C3 = 4.0;     // index-embedding center budget W_j = C3 eps^{-d_Y} per type
    double cap_scale = 10.0; // joint-mean and latent caps C 2^{-d_Y j/2}
    double L1 = 10.0;        // decoder cap scale
    int J1_cap = 3;          // decoder latent truncation (caps make finer levels inert)
    int J2_cap = 2;          // decoder covariate truncation (x-dependent class)
    int override_J = -1;     // < 0: schedule formula with d_Y
    int quad_res = 128;      // midpoint nodes per latent axis for the fine-scale integral
    bool x_dependent_charts = false; // tensor decoder class for covariate-dependent supports
    int chart_max_iter = 30;
    double chart_tol = 1e-9;
    wavelet::BasisConfig ambient_basis{.order = 2, .regularity = 1, .resolution = 12};
    wavelet::BasisConfig chart_basis{.order = 4, .regularity = 1, .resolution = 12};
};

// deterministic lattice covering B(0,L) x B(0,L) with per-factor covering
// radius <= tau2
std::vector<std::vector<double>> covering_grid(double L, double tau2, int D_X, int D_Y);

// indices of grid centers with a first-half sample within sqrt(2) tau2
std::vector<std::size_t> active_centers(const Dataset& first_half,
                                        const std::vector<std::vector<double>>& centers,
                                        double tau2);

struct Chart {
    bool active = false;
    std::size_t center_index = 0;
    std::vector<double> xk, yk;
    Eigen::MatrixXd frame; // D_Y x d_Y
    // decoder coefficients: latent index (and covariate index when the class
    // is x-dependent) -> D_Y coefficient vector
    std::vector<std::pair<wavelet::Index, Eigen::VectorXd>> coeffs;
    std::vector<std::pair<std::pair<wavelet::Index, wavelet::Index>, Eigen::VectorXd>> coeffs_x;
    double objective = 0.0;
    std::size_t window_count = 0;

    std::vector<double> encode(std::span<const double> y) const; // V^T (y - yk)
    std::vector<double> decode(std::span<const double> z, std::span<const double> x,
                               const wavelet::Basis& basis) const;
};

Chart fit_chart(std::size_t center_index, const std::vector<std::vector<double>>& centers,
                const Dataset& first_half, const LatentConfig& cfg,
                const wavelet::Basis& chart_basis);

// Joint mean regression over (psi, x) cells at one level: estimates the scaled
// conditional means 2^{j(d_Y-D_Y)/2} E[psi(Y)|x] with one shared class.
struct JointMeanModel {
    int level = 0;
    double eps_y = 1.0, eps_x = 1.0, cap = 0.0, floor_term = 0.0, radius = 1.0;
    std::vector<std::vector<double>> e_centers; // index-embedding space
    std::vector<std::vector<double>> b_centers; // covariate space
    std::vector<std::vector<int>> powers;
    std::vector<double> coef; // [e][b][power]
    // cells inside some center's transition support, with cached pooling weights
    struct CellInfo {
        wavelet::Index idx;
        double Sy = 0.0;
        std::vector<std::pair<std::size_t, double>> yw;
    };
    std::vector<CellInfo> cells;

    double eval_embedded(std::span<const double> embedding, std::span<const double> x) const;
    double eval(const wavelet::Basis& basis, const wavelet::Index& idx,
                std::span<const double> x) const;
    void rebuild_lookup();

private:
    std::unordered_map<wavelet::Index, std::size_t, wavelet::IndexHash> cell_lookup_;
};

JointMeanModel fit_joint_mean(int level, const Dataset& data, const LatentConfig& cfg,
                              const wavelet::Basis& ambient_basis);

// number of level-j ambient cells hit by at least one sample
std::size_t count_occupied(const Dataset& data, const wavelet::Basis& basis, int level,
                           double radius);

struct MixtureModel {
    LatentConfig cfg;
    int J = 0;
    std::size_t n = 0;
    std::vector<std::vector<double>> grid; // full covering grid (partition denominators)
    std::vector<Chart> charts;             // active charts only
    // per chart: latent coefficient table (index, fitted coefficient function)
    std::vector<std::vector<std::pair<wavelet::Index, smoothers::LocalPolyModel>>> latent_tables;

    double latent_density(std::size_t chart, std::span<const double> z,
                          std::span<const double> x, const wavelet::Basis& basis) const;
};

MixtureModel fit_mixture(const Dataset& data, const LatentConfig& cfg,
                         const wavelet::Basis& chart_basis);

// fine-scale term: sum_k integral of f_J^perp(G_k(z,x)) against the signed
// latent density, by tensor midpoint quadrature on the latent window;
// exactly 0 when f carries no coefficients above J
double mixture_fine_term(const MixtureModel& model, const wavelet::Basis& ambient_basis,
                         const wavelet::Basis& chart_basis, const wavelet::CoeffMap& f,
                         std::span<const double> x);

// coarse + fine combined functional estimate of E[f(Y)|X=x]
double evaluate_J(const wavelet::CoeffMap& f, std::span<const double> x,
                  const std::vector<JointMeanModel>& joint_means, const MixtureModel& mixture,
                  const wavelet::Basis& ambient_basis, const wavelet::Basis& chart_basis);

// sample from the clipped-renormalized mixture at covariate x
std::vector<std::vector<double>> sample_mixture(const MixtureModel& model,
                                                const wavelet::Basis& chart_basis,
                                                std::span<const double> x, std::size_t count,
                                                std::uint64_t seed);

} // namespace distreg::latent
