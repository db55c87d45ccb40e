#pragma once

#include "distreg/dataset.hpp"
#include "distreg/smoothers.hpp"
#include "distreg/wavelet.hpp"

#include <string>
#include <vector>

namespace distreg::regime1 {

// level cut that balances the bias-variance split; ratio = n / log n
int truncation_level_for_ratio(double ratio, double alpha_Y, double alpha_X, int D_Y, int d_X);
int truncation_level(std::size_t n, double alpha_Y, double alpha_X, int D_Y, int d_X);

// covariate bandwidth 2^{j dim/(2 aX + dX)} ratio^{-1/(2 aX + dX)}; dim is the
// response dimension entering the schedule (D_Y here, d_Y in the latent variant)
double bandwidth_for_ratio(int level, double ratio, double alpha_X, int d_X, int response_dim);
double bandwidth_x(int level, std::size_t n, double alpha_X, int d_X, int response_dim);

struct Regime1Config {
    double alpha_Y = 1.0;
    double alpha_X = 1.0;
    int D_Y = 1;
    int d_X = 1;
    double L = 1.0;              // responses live in B(0, L)
    double cap_scale = 10.0;     // per-level coefficient cap C * 2^{-D_Y j/2}
    double centers_scale = 3.0;  // W_j = centers_scale * eps^{-d_X}
    wavelet::BasisConfig basis{};
    int override_J = -1; // < 0: schedule formula
};

// Per-wavelet local-polynomial mean regression assembled into u(y|x).
class Regime1Model {
public:
    static Regime1Model fit(const Dataset& data, const Regime1Config& cfg);

    const Regime1Config& config() const { return cfg_; }
    const wavelet::Basis& basis() const { return basis_; }
    int level_cap() const { return J_; }
    std::size_t sample_size() const { return n_; }
    std::size_t stored_indices() const;

    double coefficient(const wavelet::Index& idx, std::span<const double> x) const;
    wavelet::CoeffMap coefficients(std::span<const double> x) const;
    // may be negative; the estimator is not sign-constrained
    double eval_density(std::span<const double> y, std::span<const double> x) const;
    // plug-in estimate of E[f(Y)|X=x] from f's coefficient map
    double mean_functional(const wavelet::CoeffMap& f, std::span<const double> x) const;

    void save(const std::string& path) const;
    static Regime1Model load(const std::string& path);

private:
    Regime1Config cfg_;
    wavelet::Basis basis_ = wavelet::Basis::build({});
    int J_ = 0;
    std::size_t n_ = 0;
    std::vector<std::vector<std::pair<wavelet::Index, smoothers::LocalPolyModel>>> levels_;
};

} // namespace distreg::regime1
