#include "distreg/manifold_reg.hpp"

#include "distreg/linalg.hpp"

#include <cmath>
#include <functional>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace distreg::manifold_reg {

namespace {

void enumerate_multi(int dim, int max_total, std::vector<int>& cur, int axis,
                     const std::function<void(const std::vector<int>&)>& emit) {
    if (axis == dim) {
        emit(cur);
        return;
    }
    int used = 0;
    for (int a = 0; a < axis; ++a) used += cur[static_cast<std::size_t>(a)];
    for (int v = 0; v + used <= max_total; ++v) {
        cur[static_cast<std::size_t>(axis)] = v;
        enumerate_multi(dim, max_total, cur, axis + 1, emit);
    }
    cur[static_cast<std::size_t>(axis)] = 0;
}

int total(const std::vector<int>& j) {
    int s = 0;
    for (int v : j) s += v;
    return s;
}

double factorial_of(const std::vector<int>& j) {
    double f = 1.0;
    for (int v : j)
        for (int t = 2; t <= v; ++t) f *= t;
    return f;
}

double mono(std::span<const double> v, const std::vector<int>& j) {
    double p = 1.0;
    for (std::size_t a = 0; a < j.size(); ++a)
        for (int t = 0; t < j[a]; ++t) p *= v[a];
    return p;
}

} // namespace

std::vector<MixedIndex> poly_index_set(double beta_Y, double beta_X, int d_Y, int D_X) {
    if (beta_Y <= 0 || beta_X <= 0) throw std::invalid_argument("poly_index_set: smoothness must be positive");
    std::vector<MixedIndex> out;
    std::vector<int> j1(static_cast<std::size_t>(d_Y), 0), j2(static_cast<std::size_t>(D_X), 0);
    int cap1 = static_cast<int>(std::ceil(beta_Y));
    int cap2 = static_cast<int>(std::ceil(beta_X));
    enumerate_multi(d_Y, cap1, j1, 0, [&](const std::vector<int>& a) {
        enumerate_multi(D_X, cap2, j2, 0, [&](const std::vector<int>& b) {
            if (total(a) / beta_Y + total(b) / beta_X < 1.0 - 1e-12)
                out.emplace_back(a, b);
        });
    });
    return out;
}

std::pair<double, double> bandwidths_for_ratio(double ratio, int d_Y, int d_X, double beta_Y,
                                               double beta_X, double b1, double b2) {
    double h1 = b1 * std::pow(ratio, 1.0 / (d_Y + d_X * beta_Y / beta_X));
    double h2 = b2 * std::pow(ratio, 1.0 / (d_X + d_Y * beta_X / beta_Y));
    return {h1, h2};
}

std::pair<double, double> bandwidths(std::size_t n, int d_Y, int d_X, double beta_Y,
                                     double beta_X, double b1, double b2) {
    if (n < 3) throw std::invalid_argument("bandwidths: need n >= 3");
    double ratio = std::log(static_cast<double>(n)) / static_cast<double>(n);
    return bandwidths_for_ratio(ratio, d_Y, d_X, beta_Y, beta_X, b1, b2);
}

std::vector<double> ManifoldPatch::decode(std::span<const double> z, std::span<const double> dx,
                                          const std::vector<MixedIndex>& index_set) const {
    std::vector<double> y(static_cast<std::size_t>(frame.rows()), 0.0);
    for (std::size_t p = 0; p < index_set.size(); ++p) {
        double term = mono(z, index_set[p].first) * mono(dx, index_set[p].second) /
                      (factorial_of(index_set[p].first) * factorial_of(index_set[p].second));
        for (std::size_t c = 0; c < y.size(); ++c) y[c] += coef[p](static_cast<long>(c)) * term;
    }
    return y;
}

ManifoldPatch fit_patch(std::size_t anchor, const Dataset& data, const ManifoldRegConfig& cfg,
                        const std::vector<MixedIndex>& index_set, double h1, double h2,
                        std::size_t min_window) {
    ManifoldPatch patch;
    patch.anchor_x.assign(data.x(anchor).begin(), data.x(anchor).end());
    patch.anchor_y.assign(data.y(anchor).begin(), data.y(anchor).end());
    const int D_Y = data.y_dim;
    const std::size_t P = index_set.size();

    std::vector<std::size_t> window;
    for (std::size_t i = 0; i < data.size(); ++i) {
        if (linalg::dist(data.y(i), patch.anchor_y) <= h1 &&
            linalg::dist(data.x(i), patch.anchor_x) <= h2)
            window.push_back(i);
    }
    patch.window_count = window.size();
    if (window.size() < std::max(P, min_window)) return patch; // inactive, not an error

    std::vector<std::vector<double>> local_y;
    for (std::size_t i : window) {
        std::vector<double> r(data.y(i).begin(), data.y(i).end());
        local_y.push_back(std::move(r));
    }
    Eigen::MatrixXd V = linalg::principal_frame(local_y, patch.anchor_y, cfg.d_Y);

    const std::size_t W = window.size();
    Eigen::MatrixXd Y(W, D_Y);
    Eigen::MatrixXd U(W, D_Y); // Y_i - anchor
    Eigen::MatrixXd DX(W, data.x_dim);
    for (std::size_t r = 0; r < W; ++r) {
        auto yi = data.y(window[r]);
        auto xi = data.x(window[r]);
        for (int c = 0; c < D_Y; ++c) {
            Y(static_cast<long>(r), c) = yi[static_cast<std::size_t>(c)];
            U(static_cast<long>(r), c) = yi[static_cast<std::size_t>(c)] - patch.anchor_y[static_cast<std::size_t>(c)];
        }
        for (int c = 0; c < data.x_dim; ++c)
            DX(static_cast<long>(r), c) = xi[static_cast<std::size_t>(c)] - patch.anchor_x[static_cast<std::size_t>(c)];
    }

    Eigen::MatrixXd A(W, P);
    Eigen::MatrixXd coef(P, D_Y);
    std::vector<double> z(static_cast<std::size_t>(cfg.d_Y));
    std::vector<double> dx(static_cast<std::size_t>(data.x_dim));

    auto build_design = [&](const Eigen::MatrixXd& frame) {
        for (std::size_t r = 0; r < W; ++r) {
            Eigen::VectorXd zr = frame.transpose() * U.row(static_cast<long>(r)).transpose();
            for (int c = 0; c < cfg.d_Y; ++c) z[static_cast<std::size_t>(c)] = zr(c);
            for (int c = 0; c < data.x_dim; ++c) dx[static_cast<std::size_t>(c)] = DX(static_cast<long>(r), c);
            for (std::size_t p = 0; p < P; ++p)
                A(static_cast<long>(r), static_cast<long>(p)) =
                    mono(z, index_set[p].first) * mono(dx, index_set[p].second) /
                    (factorial_of(index_set[p].first) * factorial_of(index_set[p].second));
        }
    };
    auto solve_coef = [&](double cap) {
        for (int c = 0; c < D_Y; ++c)
            coef.col(c) = linalg::box_constrained_lsq(A, Y.col(c), cap);
    };
    auto objective = [&]() {
        return (Y - A * coef).squaredNorm() / static_cast<double>(W);
    };

    build_design(V);
    solve_coef(cfg.cap);
    double obj = objective();
    patch.objective_history.push_back(obj);

    for (int it = 0; it < cfg.max_iter; ++it) {
        // gradient of the objective in V through z = V^T u
        Eigen::MatrixXd R = Y - A * coef; // W x D_Y residuals
        Eigen::MatrixXd grad = Eigen::MatrixXd::Zero(D_Y, cfg.d_Y);
        for (std::size_t r = 0; r < W; ++r) {
            Eigen::VectorXd zr = V.transpose() * U.row(static_cast<long>(r)).transpose();
            for (int c = 0; c < cfg.d_Y; ++c) z[static_cast<std::size_t>(c)] = zr(c);
            for (int c = 0; c < data.x_dim; ++c) dx[static_cast<std::size_t>(c)] = DX(static_cast<long>(r), c);
            // Jacobian of the fitted polynomial wrt z at this sample
            Eigen::MatrixXd Jz = Eigen::MatrixXd::Zero(D_Y, cfg.d_Y);
            for (std::size_t p = 0; p < P; ++p) {
                const auto& j1 = index_set[p].first;
                double xterm = mono(dx, index_set[p].second) /
                               (factorial_of(j1) * factorial_of(index_set[p].second));
                for (int l = 0; l < cfg.d_Y; ++l) {
                    if (j1[static_cast<std::size_t>(l)] == 0) continue;
                    std::vector<int> jm = j1;
                    --jm[static_cast<std::size_t>(l)];
                    double dterm = j1[static_cast<std::size_t>(l)] * mono(z, jm) * xterm;
                    Jz.col(l) += dterm * coef.row(static_cast<long>(p)).transpose();
                }
            }
            grad += -2.0 * U.row(static_cast<long>(r)).transpose() *
                    (R.row(static_cast<long>(r)) * Jz) / static_cast<double>(W);
        }
        double step = 0.5;
        bool improved = false;
        for (int bt = 0; bt < 6 && !improved; ++bt) {
            Eigen::MatrixXd Vtry = linalg::polar_orthonormal(V - step * grad);
            build_design(Vtry);
            solve_coef(cfg.cap);
            double otry = objective();
            if (otry <= obj) {
                V = Vtry;
                improved = true;
                double rel = std::abs(obj - otry) / (obj + 1e-300);
                obj = otry;
                patch.objective_history.push_back(obj);
                if (rel < cfg.tol) it = cfg.max_iter;
            } else {
                step *= 0.25;
            }
        }
        if (!improved) {
            build_design(V); // restore design/coefficients for the kept frame
            solve_coef(cfg.cap);
            obj = objective();
            break;
        }
    }

    // A coefficient pinned at the box means the window could not determine the
    // local Taylor coefficients (degenerate spread); such a patch only emits
    // junk, so it stays inactive.
    if (coef.cwiseAbs().maxCoeff() >= 0.999 * cfg.cap) return patch;

    patch.active = true;
    patch.frame = V;
    patch.objective = obj;
    patch.coef.resize(P);
    for (std::size_t p = 0; p < P; ++p) patch.coef[p] = coef.row(static_cast<long>(p)).transpose();
    patch.z_lo.assign(static_cast<std::size_t>(cfg.d_Y), 1e300);
    patch.z_hi.assign(static_cast<std::size_t>(cfg.d_Y), -1e300);
    for (std::size_t r = 0; r < W; ++r) {
        Eigen::VectorXd zr = V.transpose() * U.row(static_cast<long>(r)).transpose();
        for (int c = 0; c < cfg.d_Y; ++c) {
            patch.z_lo[static_cast<std::size_t>(c)] = std::min(patch.z_lo[static_cast<std::size_t>(c)], zr(c));
            patch.z_hi[static_cast<std::size_t>(c)] = std::max(patch.z_hi[static_cast<std::size_t>(c)], zr(c));
        }
    }
    return patch;
}

ManifoldRegModel ManifoldRegModel::fit(const Dataset& data, const ManifoldRegConfig& cfg) {
    if (data.size() < 3) throw std::invalid_argument("manifold_reg fit: need at least 3 samples");
    ManifoldRegModel m;
    m.cfg_ = cfg;
    auto [h1, h2] = bandwidths(data.size(), cfg.d_Y, cfg.d_X, cfg.beta_Y, cfg.beta_X, cfg.b1, cfg.b2);
    m.h1_ = h1;
    m.h2_ = h2;
    m.index_set_ = poly_index_set(cfg.beta_Y, cfg.beta_X, cfg.d_Y, data.x_dim);

    std::vector<std::size_t> anchors;
    if (data.size() <= cfg.anchor_cap) {
        anchors.resize(data.size());
        for (std::size_t i = 0; i < anchors.size(); ++i) anchors[i] = i;
    } else {
        // farthest-point thinning in the joint space, scaled by the window
        // sizes so every (x, y) region keeps an anchor
        auto scaled_sq = [&](std::size_t i, std::size_t j) {
            return linalg::sq_dist(data.x(i), data.x(j)) / (h2 * h2) +
                   linalg::sq_dist(data.y(i), data.y(j)) / (h1 * h1);
        };
        std::vector<double> d2(data.size());
        anchors.push_back(0);
        for (std::size_t i = 0; i < data.size(); ++i) d2[i] = scaled_sq(i, 0);
        for (;;) {
            std::size_t best = 0;
            for (std::size_t i = 1; i < data.size(); ++i)
                if (d2[i] > d2[best]) best = i;
            if (d2[best] <= 0.25) break;
            anchors.push_back(best);
            for (std::size_t i = 0; i < data.size(); ++i)
                d2[i] = std::min(d2[i], scaled_sq(i, best));
        }
    }
    std::size_t min_window =
        cfg.window_log_factor <= 0.0
            ? 0
            : static_cast<std::size_t>(
                  std::ceil(cfg.window_log_factor * std::log(static_cast<double>(data.size()))));
    for (std::size_t a : anchors)
        m.patches_.push_back(fit_patch(a, data, cfg, m.index_set_, h1, h2, min_window));
    return m;
}

Prediction ManifoldRegModel::predict(std::span<const double> x, int resolution) const {
    if (resolution < 8) throw std::invalid_argument("predict: resolution must be >= 8");
    Prediction out;
    std::vector<double> dx(x.size());
    for (const auto& patch : patches_) {
        if (!patch.active) continue;
        if (linalg::dist(x, patch.anchor_x) > h2_) continue;
        out.covered = true;
        for (std::size_t a = 0; a < x.size(); ++a) dx[a] = x[a] - patch.anchor_x[a];
        const double pad = 2.0 * h1_ / resolution;
        auto lo = [&](int c) {
            return std::max(-h1_, patch.z_lo[static_cast<std::size_t>(c)] - pad);
        };
        auto hi = [&](int c) {
            return std::min(h1_, patch.z_hi[static_cast<std::size_t>(c)] + pad);
        };
        if (cfg_.d_Y == 1) {
            for (int t = 0; t <= resolution; ++t) {
                double z[1] = {-h1_ + 2.0 * h1_ * t / resolution};
                if (z[0] < lo(0) || z[0] > hi(0)) continue;
                out.cloud.push_back(patch.decode(z, dx, index_set_));
            }
        } else if (cfg_.d_Y == 2) {
            for (int t = 0; t <= resolution; ++t)
                for (int s = 0; s <= resolution; ++s) {
                    double z[2] = {-h1_ + 2.0 * h1_ * t / resolution,
                                   -h1_ + 2.0 * h1_ * s / resolution};
                    if (z[0] * z[0] + z[1] * z[1] > h1_ * h1_) continue;
                    if (z[0] < lo(0) || z[0] > hi(0) || z[1] < lo(1) || z[1] > hi(1)) continue;
                    out.cloud.push_back(patch.decode(z, dx, index_set_));
                }
        } else {
            throw std::invalid_argument("predict: latent grids implemented for d_Y <= 2");
        }
    }
    return out;
}

double hausdorff(const std::vector<std::vector<double>>& A,
                 const std::vector<std::vector<double>>& B) {
    if (A.empty() || B.empty()) throw std::invalid_argument("hausdorff: empty point cloud");
    auto one_sided = [](const std::vector<std::vector<double>>& P,
                        const std::vector<std::vector<double>>& Q) {
        double worst = 0.0;
        for (const auto& p : P) {
            double best = 1e300;
            for (const auto& q : Q) best = std::min(best, linalg::sq_dist(p, q));
            worst = std::max(worst, best);
        }
        return std::sqrt(worst);
    };
    return one_sided(A, B) + one_sided(B, A);
}

void ManifoldRegModel::save(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open for write: " + path);
    char buf[40];
    auto put = [&](double v) {
        std::snprintf(buf, sizeof(buf), "%.17g", v);
        out << buf;
    };
    out << "manifold-reg-model 1\n";
    out << "params " << cfg_.d_Y << ' ' << cfg_.d_X << ' ';
    put(cfg_.beta_Y);
    out << ' ';
    put(cfg_.beta_X);
    out << ' ';
    put(cfg_.b1);
    out << ' ';
    put(cfg_.b2);
    out << ' ';
    put(cfg_.cap);
    out << ' ' << cfg_.anchor_cap << '\n';
    out << "bandwidths ";
    put(h1_);
    out << ' ';
    put(h2_);
    out << '\n';
    out << "patches " << patches_.size() << '\n';
    for (const auto& p : patches_) {
        out << "patch " << (p.active ? 1 : 0) << ' ' << p.window_count << ' ';
        put(p.objective);
        out << '\n';
        out << "anchor_x";
        for (double v : p.anchor_x) {
            out << ' ';
            put(v);
        }
        out << "\nanchor_y";
        for (double v : p.anchor_y) {
            out << ' ';
            put(v);
        }
        out << '\n';
        if (!p.active) continue;
        out << "frame " << p.frame.rows() << ' ' << p.frame.cols() << '\n';
        for (long r = 0; r < p.frame.rows(); ++r) {
            for (long c = 0; c < p.frame.cols(); ++c) {
                if (c) out << ' ';
                put(p.frame(r, c));
            }
            out << '\n';
        }
        out << "coef " << p.coef.size() << '\n';
        for (const auto& v : p.coef) {
            for (long c = 0; c < v.size(); ++c) {
                if (c) out << ' ';
                put(v(c));
            }
            out << '\n';
        }
        out << "span";
        for (std::size_t c = 0; c < p.z_lo.size(); ++c) {
            out << ' ';
            put(p.z_lo[c]);
            out << ' ';
            put(p.z_hi[c]);
        }
        out << '\n';
    }
}

ManifoldRegModel ManifoldRegModel::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open for read: " + path);
    std::string tag;
    int version;
    in >> tag >> version;
    if (tag != "manifold-reg-model") throw std::runtime_error("not a manifold model file: " + path);
    ManifoldRegModel m;
    in >> tag >> m.cfg_.d_Y >> m.cfg_.d_X >> m.cfg_.beta_Y >> m.cfg_.beta_X >> m.cfg_.b1 >>
        m.cfg_.b2 >> m.cfg_.cap >> m.cfg_.anchor_cap;
    in >> tag >> m.h1_ >> m.h2_;
    std::size_t count;
    in >> tag >> count;
    // anchors carry the covariate dimension; recover it from the first patch
    for (std::size_t t = 0; t < count; ++t) {
        ManifoldPatch p;
        int active;
        in >> tag >> active >> p.window_count >> p.objective;
        p.active = active != 0;
        std::string line;
        std::getline(in, line);
        std::getline(in, line);
        {
            std::stringstream ss(line);
            ss >> tag;
            double v;
            while (ss >> v) p.anchor_x.push_back(v);
        }
        std::getline(in, line);
        {
            std::stringstream ss(line);
            ss >> tag;
            double v;
            while (ss >> v) p.anchor_y.push_back(v);
        }
        if (p.active) {
            long R, C;
            in >> tag >> R >> C;
            p.frame.resize(R, C);
            for (long r = 0; r < R; ++r)
                for (long c = 0; c < C; ++c) in >> p.frame(r, c);
            std::size_t P;
            in >> tag >> P;
            p.coef.resize(P);
            for (auto& v : p.coef) {
                v.resize(R);
                for (long c = 0; c < R; ++c) in >> v(c);
            }
            in >> tag;
            p.z_lo.resize(static_cast<std::size_t>(C));
            p.z_hi.resize(static_cast<std::size_t>(C));
            for (long c = 0; c < C; ++c) in >> p.z_lo[static_cast<std::size_t>(c)] >> p.z_hi[static_cast<std::size_t>(c)];
        }
        m.patches_.push_back(std::move(p));
    }
    if (!m.patches_.empty())
        m.index_set_ = poly_index_set(m.cfg_.beta_Y, m.cfg_.beta_X, m.cfg_.d_Y,
                                      static_cast<int>(m.patches_[0].anchor_x.size()));
    return m;
}

} // namespace distreg::manifold_reg
