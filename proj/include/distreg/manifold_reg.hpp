#pragma once

#include "distreg/dataset.hpp"

#include <Eigen/Dense>
#include <string>
#include <utility>
#include <vector>

namespace distreg::manifold_reg {

// mixed multi-index pairs with |j1|/beta_Y + |j2|/beta_X < 1
using MixedIndex = std::pair<std::vector<int>, std::vector<int>>;
std::vector<MixedIndex> poly_index_set(double beta_Y, double beta_X, int d_Y, int D_X);

// (h1, h2) from ratio = log n / n
std::pair<double, double> bandwidths_for_ratio(double ratio, int d_Y, int d_X, double beta_Y,
                                               double beta_X, double b1, double b2);
std::pair<double, double> bandwidths(std::size_t n, int d_Y, int d_X, double beta_Y,
                                     double beta_X, double b1, double b2);

struct ManifoldRegConfig {
    int d_Y = 1;
    int d_X = 1;
    double beta_Y = 2.0;
    double beta_X = 2.0;
    double b1 = 1.5;
    double b2 = 1.0;
    double cap = 10.0; // L1 box on the polynomial coefficients
    std::size_t anchor_cap = 5000; // more samples than this: anchors thinned to a joint packing
    int max_iter = 30;
    double tol = 1e-9;
    // a patch activates only with >= max(|J|, ceil(window_log_factor * log n))
    // local samples; 0 keeps the bare |J| floor
    double window_log_factor = 1.0;
};

struct ManifoldPatch {
    bool active = false;
    std::vector<double> anchor_x, anchor_y;
    Eigen::MatrixXd frame;             // D_Y x d_Y, orthonormal columns
    std::vector<Eigen::VectorXd> coef; // one D_Y-vector per mixed index
    double objective = 0.0;            // final mean squared local residual
    std::vector<double> objective_history;
    std::size_t window_count = 0;
    // latent span of the fitting window; predictions stay inside it (the
    // polynomial carries no information beyond its data support)
    std::vector<double> z_lo, z_hi;

    // polynomial image point at latent z and covariate offset (x - anchor_x)
    std::vector<double> decode(std::span<const double> z, std::span<const double> dx,
                               const std::vector<MixedIndex>& index_set) const;
};

ManifoldPatch fit_patch(std::size_t anchor, const Dataset& data, const ManifoldRegConfig& cfg,
                        const std::vector<MixedIndex>& index_set, double h1, double h2,
                        std::size_t min_window = 0);

struct Prediction {
    std::vector<std::vector<double>> cloud;
    bool covered = false; // false: no anchor within h2 of x (undersampling signal)
};

class ManifoldRegModel {
public:
    static ManifoldRegModel fit(const Dataset& data, const ManifoldRegConfig& cfg);

    const ManifoldRegConfig& config() const { return cfg_; }
    double h1() const { return h1_; }
    double h2() const { return h2_; }
    const std::vector<MixedIndex>& index_set() const { return index_set_; }
    const std::vector<ManifoldPatch>& patches() const { return patches_; }

    Prediction predict(std::span<const double> x, int resolution) const;

    void save(const std::string& path) const;
    static ManifoldRegModel load(const std::string& path);

private:
    ManifoldRegConfig cfg_;
    double h1_ = 0, h2_ = 0;
    std::vector<MixedIndex> index_set_;
    std::vector<ManifoldPatch> patches_;
};

// sum convention: sup-inf(A->B) + sup-inf(B->A); empty input is an error
double hausdorff(const std::vector<std::vector<double>>& A,
                 const std::vector<std::vector<double>>& B);

} // namespace distreg::manifold_reg
