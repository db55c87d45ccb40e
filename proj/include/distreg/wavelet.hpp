#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

namespace distreg::wavelet {

// Scaling filter taps for the given number of vanishing moments (2..10),
// normalized so the taps sum to sqrt(2). Deterministic spectral factorization,
// computed once and cached.
const std::vector<double>& daubechies_filter(int order);

// one tap per line, '#' comments allowed
std::vector<double> load_filter(const std::string& path);

struct BasisConfig {
    int order = 4;      // vanishing moments
    int regularity = 1; // derivative tables computed up to this order
    int resolution = 14; // dyadic grid depth for cascade evaluation
    std::string filter_file; // optional override of the embedded tables
};

// Compactly supported orthonormal family: scaling function phi and mother
// wavelet psi tabulated with derivatives on a dyadic grid, evaluated with
// linear interpolation between nodes. Immutable after construction.
class Basis {
public:
    static Basis build(const BasisConfig& cfg);
    static Basis build_from_filter(std::vector<double> taps, int regularity, int resolution);

    int order() const { return order_; }
    int regularity() const { return regularity_; }
    int resolution() const { return resolution_; }
    const std::vector<double>& filter() const { return filter_; }
    // both phi and psi are supported in [0, taps-1]
    double support_length() const { return static_cast<double>(filter_.size() - 1); }

    // exact 0 outside the support; deriv must be <= regularity
    double scaling(double t, int deriv = 0) const { return eval_table(phi_, t, deriv); }
    double mother(double t, int deriv = 0) const { return eval_table(psi_, t, deriv); }
    double factor(bool is_mother, double t, int deriv = 0) const {
        return is_mother ? mother(t, deriv) : scaling(t, deriv);
    }

    // measured sup-norm of the tabulated function (constants in the basis are
    // existential in theory; we expose what this basis actually achieves)
    double measured_sup(bool is_mother, int deriv = 0) const;

    // dyadic-grid quadrature of f over [0, taps-1] using the tabulated values
    double grid_integral(bool is_mother, const std::function<double(double)>& weight) const;

private:
    Basis() = default;
    double eval_table(const std::vector<std::vector<double>>& tab, double t, int deriv) const;

    int order_ = 0;
    int regularity_ = 0;
    int resolution_ = 0;
    std::vector<double> filter_;
    // tab[m][i] = value of m-th derivative at i / 2^resolution
    std::vector<std::vector<double>> phi_, psi_;
};

// Tensor-product basis member: level j, per-axis type bitmask (bit set =
// mother factor), integer translation. Level 0 carries scaling type only;
// level j >= 1 uses dilation 2^{j-1} and prefactor 2^{d(j-1)/2}.
struct Index {
    int level = 0;
    unsigned type = 0;
    std::vector<int> shift;

    int dim() const { return static_cast<int>(shift.size()); }
    bool operator==(const Index& o) const {
        return level == o.level && type == o.type && shift == o.shift;
    }
};

struct IndexHash {
    std::size_t operator()(const Index& idx) const {
        std::uint64_t h = 1469598103934665603ull;
        auto mixin = [&h](std::uint64_t v) {
            h ^= v + 0x9e3779b97f4a7c15ull + (h << 6) + (h >> 2);
        };
        mixin(static_cast<std::uint64_t>(idx.level));
        mixin(idx.type);
        for (int k : idx.shift) mixin(static_cast<std::uint64_t>(static_cast<std::int64_t>(k)) * 0x100000001b3ull);
        return static_cast<std::size_t>(h);
    }
};

using CoeffMap = std::unordered_map<Index, double, IndexHash>;

double scale_of(const Index& idx);      // 2^{max(level-1,0)}
double prefactor(const Index& idx);     // 2^{d(level-1)/2}, 1 at level 0

struct Rect {
    std::vector<double> lo, hi;
    double diameter() const;
};
Rect support_rect(const Basis& basis, const Index& idx);
// Euclidean distance from the origin-centered ball test
bool rect_intersects_ball(const Rect& rect, double radius);

double evaluate(const Basis& basis, const Index& idx, std::span<const double> x);

// partial derivative along one axis (chain rule over the dyadic dilation);
// needs basis regularity >= 1
double evaluate_partial(const Basis& basis, const Index& idx, std::span<const double> x, int axis);

// sup-norm bound of the tensor basis function from the tabulated factors
double index_sup(const Basis& basis, const Index& idx);

// all indices at the given level whose support rectangle intersects B(0, radius)
std::vector<Index> enumerate_indices(const Basis& basis, int level, int dim, double radius);

// empirical coefficient sum_i w_i psi(x_i); points outside the tabulated range
// contribute 0
double empirical_coefficient(const Basis& basis, const Index& idx,
                             const std::vector<std::vector<double>>& points,
                             std::span<const double> weights);

// midpoint quadrature of psi * f over the support rectangle; per-axis step
// 2^{-quad_depth} in the wavelet argument
double function_coefficient(const Basis& basis, const Index& idx,
                            const std::function<double(std::span<const double>)>& f,
                            int quad_depth);

// dyadic-quadrature inner product; factorizes across axes
double inner_product(const Basis& basis, const Index& a, const Index& b);

// affine embedding of (shift, type) into [0,1]^{d+1} for indices within
// B(0, radius); separation scales like 2^{-level}
std::vector<double> index_embedding(const Basis& basis, const Index& idx, double radius);

double truncated_reconstruction(const Basis& basis, const CoeffMap& coeffs, int level_cap,
                                std::span<const double> x);

} // namespace distreg::wavelet
