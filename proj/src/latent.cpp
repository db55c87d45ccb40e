#include "distreg/latent.hpp"

#include "distreg/linalg.hpp"
#include "distreg/regime1.hpp"
#include "distreg/rng.hpp"

#include <cmath>
#include <stdexcept>
#include <unordered_map>
#include <unordered_set>

namespace distreg::latent {

std::vector<std::vector<double>> covering_grid(double L, double tau2, int D_X, int D_Y) {
    if (tau2 <= 0.0 || tau2 >= L + 1e-12) {
        if (tau2 <= 0.0) throw std::invalid_argument("covering_grid: tau2 must be positive");
    }
    auto axis_nodes = [&](int factor_dim) {
        double step = tau2 / std::sqrt(static_cast<double>(factor_dim));
        std::vector<double> nodes;
        int kmax = static_cast<int>(std::floor(L / step + 1e-12));
        for (int k = -kmax; k <= kmax; ++k) nodes.push_back(k * step);
        if (nodes.empty()) nodes.push_back(0.0);
        return nodes;
    };
    auto xn = axis_nodes(D_X);
    auto yn = axis_nodes(D_Y);
    std::vector<std::vector<double>> centers;
    std::vector<std::size_t> pos(static_cast<std::size_t>(D_X + D_Y), 0);
    for (;;) {
        std::vector<double> c(static_cast<std::size_t>(D_X + D_Y));
        for (int a = 0; a < D_X; ++a) c[static_cast<std::size_t>(a)] = xn[pos[static_cast<std::size_t>(a)]];
        for (int a = 0; a < D_Y; ++a)
            c[static_cast<std::size_t>(D_X + a)] = yn[pos[static_cast<std::size_t>(D_X + a)]];
        centers.push_back(std::move(c));
        int axis = 0;
        while (axis < D_X + D_Y) {
            std::size_t limit = axis < D_X ? xn.size() : yn.size();
            if (++pos[static_cast<std::size_t>(axis)] < limit) break;
            pos[static_cast<std::size_t>(axis)] = 0;
            ++axis;
        }
        if (axis == D_X + D_Y) break;
    }
    return centers;
}

namespace {

std::vector<double> joint_point(std::span<const double> x, std::span<const double> y) {
    std::vector<double> p;
    p.reserve(x.size() + y.size());
    p.insert(p.end(), x.begin(), x.end());
    p.insert(p.end(), y.begin(), y.end());
    return p;
}

} // namespace

std::vector<std::size_t> active_centers(const Dataset& first_half,
                                        const std::vector<std::vector<double>>& centers,
                                        double tau2) {
    std::vector<std::size_t> active;
    double r = std::sqrt(2.0) * tau2;
    for (std::size_t k = 0; k < centers.size(); ++k) {
        for (std::size_t i = 0; i < first_half.size(); ++i) {
            auto p = joint_point(first_half.x(i), first_half.y(i));
            if (linalg::dist(p, centers[k]) <= r) {
                active.push_back(k);
                break;
            }
        }
    }
    return active;
}

std::vector<double> Chart::encode(std::span<const double> y) const {
    Eigen::VectorXd u(static_cast<long>(y.size()));
    for (std::size_t c = 0; c < y.size(); ++c) u(static_cast<long>(c)) = y[c] - yk[c];
    Eigen::VectorXd z = frame.transpose() * u;
    return std::vector<double>(z.data(), z.data() + z.size());
}

std::vector<double> Chart::decode(std::span<const double> z, std::span<const double> x,
                                  const wavelet::Basis& basis) const {
    std::vector<double> y(yk.size(), 0.0);
    for (const auto& [idx, g] : coeffs) {
        double v = wavelet::evaluate(basis, idx, z);
        if (v == 0.0) continue;
        for (std::size_t c = 0; c < y.size(); ++c) y[c] += g(static_cast<long>(c)) * v;
    }
    for (const auto& [pair, g] : coeffs_x) {
        double v = wavelet::evaluate(basis, pair.first, z);
        if (v == 0.0) continue;
        v *= wavelet::evaluate(basis, pair.second, x);
        if (v == 0.0) continue;
        for (std::size_t c = 0; c < y.size(); ++c) y[c] += g(static_cast<long>(c)) * v;
    }
    return y;
}

Chart fit_chart(std::size_t center_index, const std::vector<std::vector<double>>& centers,
                const Dataset& first_half, const LatentConfig& cfg,
                const wavelet::Basis& chart_basis) {
    Chart chart;
    chart.center_index = center_index;
    const auto& omega = centers[center_index];
    chart.xk.assign(omega.begin(), omega.begin() + cfg.D_X);
    chart.yk.assign(omega.begin() + cfg.D_X, omega.end());

    std::vector<std::size_t> window;
    for (std::size_t i = 0; i < first_half.size(); ++i) {
        if (linalg::dist(first_half.x(i), chart.xk) <= 2.0 * cfg.tau2 &&
            linalg::dist(first_half.y(i), chart.yk) <= 2.0 * cfg.tau2)
            window.push_back(i);
    }
    chart.window_count = window.size();
    if (window.empty()) return chart;

    std::vector<std::vector<double>> local_y;
    for (std::size_t i : window) local_y.emplace_back(first_half.y(i).begin(), first_half.y(i).end());
    Eigen::MatrixXd V = linalg::principal_frame(local_y, chart.yk, cfg.d_Y);

    // decoder index set with per-coefficient caps
    int J1 = std::min(cfg.J1_cap,
                      std::max(1, static_cast<int>(std::ceil(
                                      std::log2(std::max<double>(first_half.size(), 2)) / cfg.d_Y))));
    std::vector<wavelet::Index> zidx;
    std::vector<wavelet::Index> xidx; // paired covariate factors when x-dependent
    std::vector<double> caps;
    for (int j1 = 0; j1 <= J1; ++j1) {
        auto lvl = wavelet::enumerate_indices(chart_basis, j1, cfg.d_Y, 2.0 * cfg.tau2);
        if (!cfg.x_dependent_charts) {
            double delta = std::pow(2.0, -0.5 * cfg.d_Y * j1 - j1 * cfg.beta_Y);
            for (const auto& idx : lvl) {
                zidx.push_back(idx);
                caps.push_back(cfg.L1 * delta);
            }
        } else {
            for (int j2 = 0; j2 <= cfg.J2_cap; ++j2) {
                double delta = std::pow(2.0, -0.5 * (cfg.d_Y * j1 + cfg.D_X * j2) -
                                                 std::max(j1 * cfg.beta_Y, j2 * cfg.beta_X));
                for (const auto& cov :
                     wavelet::enumerate_indices(chart_basis, j2, cfg.D_X, cfg.L)) {
                    for (const auto& idx : lvl) {
                        zidx.push_back(idx);
                        xidx.push_back(cov);
                        caps.push_back(cfg.L1 * delta);
                    }
                }
            }
        }
    }
    const std::size_t P = zidx.size();
    const std::size_t W = window.size();
    Eigen::VectorXd capvec(static_cast<long>(P));
    for (std::size_t p = 0; p < P; ++p) capvec(static_cast<long>(p)) = caps[p];

    Eigen::MatrixXd Y(W, cfg.D_Y), U(W, cfg.D_Y);
    for (std::size_t r = 0; r < W; ++r) {
        auto yr = first_half.y(window[r]);
        for (int c = 0; c < cfg.D_Y; ++c) {
            Y(static_cast<long>(r), c) = yr[static_cast<std::size_t>(c)];
            U(static_cast<long>(r), c) = yr[static_cast<std::size_t>(c)] - chart.yk[static_cast<std::size_t>(c)];
        }
    }

    Eigen::MatrixXd A(W, P);
    Eigen::MatrixXd G(P, cfg.D_Y);
    std::vector<double> z(static_cast<std::size_t>(cfg.d_Y));
    auto build_design = [&](const Eigen::MatrixXd& frame) {
        for (std::size_t r = 0; r < W; ++r) {
            Eigen::VectorXd zr = frame.transpose() * U.row(static_cast<long>(r)).transpose();
            for (int c = 0; c < cfg.d_Y; ++c) z[static_cast<std::size_t>(c)] = zr(c);
            auto xr = first_half.x(window[r]);
            for (std::size_t p = 0; p < P; ++p) {
                double v = wavelet::evaluate(chart_basis, zidx[p], z);
                if (v != 0.0 && !xidx.empty()) v *= wavelet::evaluate(chart_basis, xidx[p], xr);
                A(static_cast<long>(r), static_cast<long>(p)) = v;
            }
        }
    };
    auto solve = [&]() {
        for (int c = 0; c < cfg.D_Y; ++c)
            G.col(c) = linalg::box_constrained_lsq(A, Y.col(c), capvec);
    };
    auto objective = [&]() { return (Y - A * G).squaredNorm() / static_cast<double>(W); };

    build_design(V);
    solve();
    double obj = objective();

    for (int it = 0; it < cfg.chart_max_iter; ++it) {
        Eigen::MatrixXd R = Y - A * G;
        Eigen::MatrixXd grad = Eigen::MatrixXd::Zero(cfg.D_Y, cfg.d_Y);
        for (std::size_t r = 0; r < W; ++r) {
            Eigen::VectorXd zr = V.transpose() * U.row(static_cast<long>(r)).transpose();
            for (int c = 0; c < cfg.d_Y; ++c) z[static_cast<std::size_t>(c)] = zr(c);
            auto xr = first_half.x(window[r]);
            Eigen::MatrixXd Jz = Eigen::MatrixXd::Zero(cfg.D_Y, cfg.d_Y);
            for (std::size_t p = 0; p < P; ++p) {
                for (int l = 0; l < cfg.d_Y; ++l) {
                    double d = wavelet::evaluate_partial(chart_basis, zidx[p], z, l);
                    if (d == 0.0) continue;
                    if (!xidx.empty()) d *= wavelet::evaluate(chart_basis, xidx[p], xr);
                    Jz.col(l) += d * G.row(static_cast<long>(p)).transpose();
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
            solve();
            double otry = objective();
            if (otry <= obj) {
                V = Vtry;
                improved = true;
                double rel = std::abs(obj - otry) / (obj + 1e-300);
                obj = otry;
                if (rel < cfg.chart_tol) it = cfg.chart_max_iter;
            } else {
                step *= 0.25;
            }
        }
        if (!improved) {
            build_design(V);
            solve();
            obj = objective();
            break;
        }
    }

    chart.active = true;
    chart.frame = V;
    chart.objective = obj;
    for (std::size_t p = 0; p < P; ++p) {
        Eigen::VectorXd g = G.row(static_cast<long>(p)).transpose();
        if (g.cwiseAbs().maxCoeff() == 0.0) continue;
        if (xidx.empty()) chart.coeffs.emplace_back(zidx[p], g);
        else chart.coeffs_x.emplace_back(std::make_pair(zidx[p], xidx[p]), g);
    }
    return chart;
}

double JointMeanModel::eval_embedded(std::span<const double> embedding,
                                     std::span<const double> x) const {
    double Sy = 0.0;
    std::vector<std::pair<std::size_t, double>> yws;
    for (std::size_t e = 0; e < e_centers.size(); ++e) {
        double w = smoothers::transition(linalg::dist(embedding, e_centers[e]) / eps_y);
        if (w > 0.0) {
            yws.emplace_back(e, w);
            Sy += w;
        }
    }
    if (yws.empty()) return 0.0;
    double Sx = 0.0;
    std::vector<std::pair<std::size_t, double>> xws;
    for (std::size_t b = 0; b < b_centers.size(); ++b) {
        double w = smoothers::transition(linalg::dist(x, b_centers[b]) / eps_x);
        if (w > 0.0) {
            xws.emplace_back(b, w);
            Sx += w;
        }
    }
    double denom = Sy * Sx + floor_term;
    if (denom <= 0.0) return 0.0;
    const std::size_t K = powers.size();
    double numer = 0.0;
    for (const auto& [e, yw] : yws) {
        for (const auto& [b, xw] : xws) {
            double poly = 0.0;
            for (std::size_t k = 0; k < K; ++k) {
                double term = 1.0;
                for (std::size_t a = 0; a < powers[k].size(); ++a)
                    for (int t = 0; t < powers[k][a]; ++t)
                        term *= x[a] - b_centers[b][a];
                poly += coef[(e * b_centers.size() + b) * K + k] * term;
            }
            numer += yw * xw * poly;
        }
    }
    return numer / denom;
}

double JointMeanModel::eval(const wavelet::Basis& basis, const wavelet::Index& idx,
                            std::span<const double> x) const {
    if (idx.level != level) return 0.0;
    auto it = cell_lookup_.find(idx);
    if (it == cell_lookup_.end()) {
        if (!cells.empty() || e_centers.empty()) return 0.0;
        auto emb = wavelet::index_embedding(basis, idx, radius);
        return eval_embedded(emb, x);
    }
    const CellInfo& cell = cells[it->second];
    double Sx = 0.0;
    std::vector<std::pair<std::size_t, double>> xws;
    for (std::size_t b = 0; b < b_centers.size(); ++b) {
        double w = smoothers::transition(linalg::dist(x, b_centers[b]) / eps_x);
        if (w > 0.0) {
            xws.emplace_back(b, w);
            Sx += w;
        }
    }
    double denom = cell.Sy * Sx + floor_term;
    if (denom <= 0.0) return 0.0;
    const std::size_t K = powers.size();
    const std::size_t BK = b_centers.size() * K;
    double numer = 0.0;
    for (const auto& [e, yw] : cell.yw) {
        for (const auto& [b, xw] : xws) {
            double poly = 0.0;
            for (std::size_t k = 0; k < K; ++k) {
                double term = 1.0;
                for (std::size_t a = 0; a < powers[k].size(); ++a)
                    for (int t = 0; t < powers[k][a]; ++t)
                        term *= x[a] - b_centers[b][a];
                poly += coef[e * BK + b * K + k] * term;
            }
            numer += yw * xw * poly;
        }
    }
    return numer / denom;
}

void JointMeanModel::rebuild_lookup() {
    cell_lookup_.clear();
    for (std::size_t c = 0; c < cells.size(); ++c) cell_lookup_[cells[c].idx] = c;
}

std::size_t count_occupied(const Dataset& data, const wavelet::Basis& basis, int level,
                           double radius) {
    const int d = data.y_dim;
    const int w = static_cast<int>(basis.support_length());
    const double s = std::ldexp(1.0, std::max(level - 1, 0));
    std::unordered_set<wavelet::Index, wavelet::IndexHash> seen;
    std::vector<int> klo(static_cast<std::size_t>(d)), khi(static_cast<std::size_t>(d)), k(static_cast<std::size_t>(d));
    std::vector<unsigned> types;
    if (level == 0) types.push_back(0u);
    else
        for (unsigned g = 1; g < (1u << d); ++g) types.push_back(g);
    for (std::size_t i = 0; i < data.size(); ++i) {
        auto p = data.y(i);
        bool ok = true;
        for (int a = 0; a < d && ok; ++a) {
            double u = s * p[static_cast<std::size_t>(a)];
            klo[static_cast<std::size_t>(a)] = static_cast<int>(std::ceil(u)) - w;
            khi[static_cast<std::size_t>(a)] = static_cast<int>(std::floor(u));
            ok = klo[static_cast<std::size_t>(a)] <= khi[static_cast<std::size_t>(a)];
        }
        if (!ok) continue;
        k = klo;
        for (;;) {
            wavelet::Index idx;
            idx.level = level;
            idx.shift = k;
            idx.type = types[0];
            if (wavelet::evaluate(basis, idx, p) != 0.0 &&
                wavelet::rect_intersects_ball(wavelet::support_rect(basis, idx), radius)) {
                for (unsigned g : types) {
                    idx.type = g;
                    seen.insert(idx);
                }
            }
            int axis = 0;
            while (axis < d) {
                std::size_t ai = static_cast<std::size_t>(axis);
                if (++k[ai] <= khi[ai]) break;
                k[ai] = klo[ai];
                ++axis;
            }
            if (axis == d) break;
        }
    }
    return seen.size();
}

JointMeanModel fit_joint_mean(int level, const Dataset& data, const LatentConfig& cfg,
                              const wavelet::Basis& ambient_basis) {
    const std::size_t n = data.size();
    if (n == 0) throw std::invalid_argument("fit_joint_mean: empty dataset");
    JointMeanModel m;
    m.level = level;
    m.radius = cfg.L;
    m.floor_term = 1.0 / static_cast<double>(n);
    m.eps_y = std::pow(2.0, -level) / cfg.C1;
    m.eps_x =
        regime1::bandwidth_x(level, n, cfg.alpha_X, cfg.d_X, cfg.d_Y);
    m.powers = smoothers::poly_powers(cfg.D_X, cfg.alpha_X);
    m.cap = cfg.cap_scale * std::pow(2.0, -0.5 * cfg.d_Y * level);

    // occupied cells and their embeddings; the center packing is bounded by
    // its separation (equivalently, the paper's "sufficiently large" budget)
    std::unordered_map<wavelet::Index, double, wavelet::IndexHash> occupied;
    {
        const int d = cfg.D_Y;
        const int w = static_cast<int>(ambient_basis.support_length());
        const double s = std::ldexp(1.0, std::max(level - 1, 0));
        std::vector<int> klo(static_cast<std::size_t>(d)), khi(static_cast<std::size_t>(d)), k(static_cast<std::size_t>(d));
        for (std::size_t i = 0; i < n; ++i) {
            auto p = data.y(i);
            bool ok = true;
            for (int a = 0; a < d && ok; ++a) {
                double u = s * p[static_cast<std::size_t>(a)];
                klo[static_cast<std::size_t>(a)] = static_cast<int>(std::ceil(u)) - w;
                khi[static_cast<std::size_t>(a)] = static_cast<int>(std::floor(u));
                ok = klo[static_cast<std::size_t>(a)] <= khi[static_cast<std::size_t>(a)];
            }
            if (!ok) continue;
            k = klo;
            for (;;) {
                wavelet::Index idx;
                idx.level = level;
                idx.shift = k;
                idx.type = level == 0 ? 0u : 1u;
                if (wavelet::rect_intersects_ball(wavelet::support_rect(ambient_basis, idx), cfg.L)) {
                    if (level == 0) {
                        occupied.emplace(idx, 0.0);
                    } else {
                        for (unsigned g = 1; g < (1u << d); ++g) {
                            idx.type = g;
                            occupied.emplace(idx, 0.0);
                        }
                    }
                }
                int axis = 0;
                while (axis < d) {
                    std::size_t ai = static_cast<std::size_t>(axis);
                    if (++k[ai] <= khi[ai]) break;
                    k[ai] = klo[ai];
                    ++axis;
                }
                if (axis == d) break;
            }
        }
    }

    std::vector<std::vector<double>> occupied_embeddings;
    for (const auto& [idx, unused] : occupied)
        occupied_embeddings.push_back(wavelet::index_embedding(ambient_basis, idx, cfg.L));
    // tensor types sit on their own embedding sheet farther than eps_y apart,
    // so the center budget carries the type multiplicity explicitly
    m.e_centers = smoothers::greedy_packing(occupied_embeddings, m.eps_y, 0);
    if (m.e_centers.empty()) {
        // nothing occupied at this level: the zero model
        m.coef.clear();
        return m;
    }

    std::vector<std::vector<double>> xs(n);
    for (std::size_t i = 0; i < n; ++i) xs[i].assign(data.x(i).begin(), data.x(i).end());
    std::size_t Wx_target = static_cast<std::size_t>(std::ceil(cfg.C2 * std::pow(m.eps_x, -cfg.d_X)));
    m.b_centers = smoothers::greedy_packing(xs, m.eps_x, std::max<std::size_t>(Wx_target, 1));

    const std::size_t E = m.e_centers.size();
    const std::size_t B = m.b_centers.size();
    const std::size_t K = m.powers.size();

    // per-sample sparse covariate features and plain rho sums
    struct XRow {
        double Sx = 0.0;
        std::vector<std::pair<std::size_t, double>> rho;   // (b, rho_b)
        std::vector<double> feat;                          // rho_b * (x-b)^k, aligned with rho*K
    };
    std::vector<XRow> xrows(n);
    for (std::size_t i = 0; i < n; ++i) {
        auto& row = xrows[i];
        for (std::size_t b = 0; b < B; ++b) {
            double w = smoothers::transition(linalg::dist(xs[i], m.b_centers[b]) / m.eps_x);
            if (w <= 0.0) continue;
            row.Sx += w;
            row.rho.emplace_back(b, w);
            for (std::size_t k = 0; k < K; ++k) {
                double term = 1.0;
                for (std::size_t a = 0; a < m.powers[k].size(); ++a)
                    for (int t = 0; t < m.powers[k][a]; ++t)
                        term *= xs[i][a] - m.b_centers[b][a];
                row.feat.push_back(w * term);
            }
        }
    }

    // in-halo cells: level indices whose embedding is within the transition
    // support of some center
    using Cell = JointMeanModel::CellInfo;
    std::vector<Cell>& cells = m.cells;
    for (const auto& idx : wavelet::enumerate_indices(ambient_basis, level, cfg.D_Y, cfg.L)) {
        auto emb = wavelet::index_embedding(ambient_basis, idx, cfg.L);
        Cell cell;
        cell.idx = idx;
        for (std::size_t e = 0; e < E; ++e) {
            double w = smoothers::transition(linalg::dist(emb, m.e_centers[e]) / m.eps_y);
            if (w > 0.0) {
                cell.yw.emplace_back(e, w);
                cell.Sy += w;
            }
        }
        if (!cell.yw.empty()) cells.push_back(std::move(cell));
    }

    const double resp_scale = std::pow(2.0, 0.5 * level * (cfg.d_Y - cfg.D_Y));
    const std::size_t BK = B * K;
    m.coef.assign(E * BK, 0.0);

    // response lookup per sample: cells containing Y_i at this level
    std::unordered_map<wavelet::Index, std::size_t, wavelet::IndexHash> cell_of;
    for (std::size_t c = 0; c < cells.size(); ++c) cell_of[cells[c].idx] = c;
    std::vector<std::vector<std::pair<std::size_t, double>>> cell_resp(cells.size());
    {
        const int d = cfg.D_Y;
        const int w = static_cast<int>(ambient_basis.support_length());
        const double s = std::ldexp(1.0, std::max(level - 1, 0));
        std::vector<int> klo(static_cast<std::size_t>(d)), khi(static_cast<std::size_t>(d)), k(static_cast<std::size_t>(d));
        std::vector<unsigned> types;
        if (level == 0) types.push_back(0u);
        else
            for (unsigned g = 1; g < (1u << d); ++g) types.push_back(g);
        for (std::size_t i = 0; i < n; ++i) {
            if (xrows[i].rho.empty()) continue;
            auto p = data.y(i);
            bool ok = true;
            for (int a = 0; a < d && ok; ++a) {
                double u = s * p[static_cast<std::size_t>(a)];
                klo[static_cast<std::size_t>(a)] = static_cast<int>(std::ceil(u)) - w;
                khi[static_cast<std::size_t>(a)] = static_cast<int>(std::floor(u));
                ok = klo[static_cast<std::size_t>(a)] <= khi[static_cast<std::size_t>(a)];
            }
            if (!ok) continue;
            k = klo;
            for (;;) {
                wavelet::Index idx;
                idx.level = level;
                idx.shift = k;
                for (unsigned g : types) {
                    idx.type = g;
                    auto it = cell_of.find(idx);
                    if (it == cell_of.end()) continue;
                    double resp = resp_scale * wavelet::evaluate(ambient_basis, idx, p);
                    if (resp != 0.0) cell_resp[it->second].emplace_back(i, resp);
                }
                int axis = 0;
                while (axis < d) {
                    std::size_t ai = static_cast<std::size_t>(axis);
                    if (++k[ai] <= khi[ai]) break;
                    k[ai] = klo[ai];
                    ++axis;
                }
                if (axis == d) break;
            }
        }
    }

    // independent box-constrained least squares per embedding center: rows are
    // (sample, nearby cell) pairs weighted by the cell's pooling weight over
    // the shared denominator
    std::vector<std::vector<std::size_t>> cells_of_center(E);
    for (std::size_t c = 0; c < cells.size(); ++c)
        for (const auto& [e, yw] : cells[c].yw) cells_of_center[e].push_back(c);
    Eigen::MatrixXd G(static_cast<long>(BK), static_cast<long>(BK));
    Eigen::VectorXd rhs(static_cast<long>(BK));
    for (std::size_t e = 0; e < E; ++e) {
        if (cells_of_center[e].empty()) continue;
        G.setZero();
        rhs.setZero();
        for (std::size_t c : cells_of_center[e]) {
            const Cell& cell = cells[c];
            double yw = 0.0;
            for (const auto& [ee, w] : cell.yw)
                if (ee == e) yw = w;
            std::vector<double> respond(n, 0.0);
            for (const auto& [i, r] : cell_resp[c]) respond[i] = r;
            for (std::size_t i = 0; i < n; ++i) {
                const auto& row = xrows[i];
                if (row.rho.empty()) continue;
                double denom = cell.Sy * row.Sx + m.floor_term;
                double w = yw / denom;
                for (std::size_t a = 0; a < row.rho.size(); ++a)
                    for (std::size_t ka = 0; ka < K; ++ka) {
                        long ca = static_cast<long>(row.rho[a].first * K + ka);
                        double fa = w * row.feat[a * K + ka];
                        rhs(ca) += respond[i] * fa;
                        for (std::size_t b = 0; b < row.rho.size(); ++b)
                            for (std::size_t kb = 0; kb < K; ++kb)
                                G(ca, static_cast<long>(row.rho[b].first * K + kb)) +=
                                    fa * w * row.feat[b * K + kb];
                    }
            }
        }
        Eigen::VectorXd sol = linalg::box_constrained_lsq_normal(G, rhs, m.cap);
        for (std::size_t c = 0; c < BK; ++c) m.coef[e * BK + c] = sol(static_cast<long>(c));
    }
    m.rebuild_lookup();
    return m;
}

double MixtureModel::latent_density(std::size_t chart, std::span<const double> z,
                                    std::span<const double> x,
                                    const wavelet::Basis& basis) const {
    double acc = 0.0;
    for (const auto& [idx, model] : latent_tables[chart]) {
        double v = wavelet::evaluate(basis, idx, z);
        if (v != 0.0) acc += v * model.eval(x);
    }
    return acc;
}

MixtureModel fit_mixture(const Dataset& data, const LatentConfig& cfg,
                         const wavelet::Basis& chart_basis) {
    if (data.size() < 4) throw std::invalid_argument("fit_mixture: need at least 4 samples");
    MixtureModel m;
    m.cfg = cfg;
    m.n = data.size();
    m.J = cfg.override_J >= 0 ? cfg.override_J
                              : regime1::truncation_level(data.size(), cfg.alpha_Y, cfg.alpha_X,
                                                          cfg.d_Y, cfg.d_X);
    m.grid = covering_grid(cfg.L, cfg.tau2, cfg.D_X, cfg.D_Y);

    Dataset first = data.head_half();
    Dataset second = data.tail_half();
    auto active = active_centers(first, m.grid, cfg.tau2);
    for (std::size_t k : active) {
        auto chart = fit_chart(k, m.grid, first, cfg, chart_basis);
        if (chart.active) m.charts.push_back(std::move(chart));
    }

    // second-half machinery shared across charts: partition weights and
    // per-level covariate designs
    const std::size_t n2 = second.size();
    smoothers::PartitionWeights pw{.centers = m.grid, .scale = cfg.tau2};
    std::vector<std::vector<double>> weights(n2); // per sample, per active chart
    for (std::size_t i = 0; i < n2; ++i) {
        auto p = joint_point(second.x(i), second.y(i));
        auto full = smoothers::partition_weights(p, pw);
        weights[i].resize(m.charts.size());
        for (std::size_t c = 0; c < m.charts.size(); ++c)
            weights[i][c] = full[m.charts[c].center_index];
    }
    std::vector<std::vector<double>> xs2(n2);
    for (std::size_t i = 0; i < n2; ++i) xs2[i].assign(second.x(i).begin(), second.x(i).end());

    m.latent_tables.resize(m.charts.size());
    std::vector<double> resp(n2);
    for (int j = 0; j <= m.J; ++j) {
        double eps = regime1::bandwidth_x(j, data.size(), cfg.alpha_X, cfg.d_X, cfg.d_Y);
        std::size_t target = static_cast<std::size_t>(std::ceil(cfg.C2 * std::pow(eps, -cfg.d_X)));
        auto centers = smoothers::greedy_packing(xs2, eps, std::max<std::size_t>(target, 1));
        auto design = smoothers::LocalPolyDesign::build(xs2, std::move(centers), eps, cfg.alpha_X,
                                                        1.0 / static_cast<double>(data.size()));
        double cap = cfg.cap_scale * std::pow(2.0, -0.5 * cfg.d_Y * j);
        auto indices = wavelet::enumerate_indices(chart_basis, j, cfg.d_Y, 2.0 * cfg.tau2);
        for (std::size_t c = 0; c < m.charts.size(); ++c) {
            // latent coordinates where this chart carries weight
            std::vector<std::pair<std::size_t, std::vector<double>>> zs;
            for (std::size_t i = 0; i < n2; ++i)
                if (weights[i][c] != 0.0) zs.emplace_back(i, m.charts[c].encode(second.y(i)));
            for (const auto& idx : indices) {
                bool any = false;
                std::fill(resp.begin(), resp.end(), 0.0);
                for (const auto& [i, z] : zs) {
                    resp[i] = weights[i][c] * wavelet::evaluate(chart_basis, idx, z);
                    any = any || resp[i] != 0.0;
                }
                smoothers::LocalPolyModel fitted;
                if (any) {
                    fitted = design.fit(resp, cap);
                } else {
                    fitted.centers = design.centers;
                    fitted.powers = design.powers;
                    fitted.coef.assign(design.centers.size() * design.powers.size(), 0.0);
                    fitted.bandwidth = eps;
                    fitted.floor_term = design.floor_term;
                    fitted.cap = cap;
                }
                m.latent_tables[c].emplace_back(idx, std::move(fitted));
            }
        }
    }
    return m;
}

double mixture_fine_term(const MixtureModel& model, const wavelet::Basis& ambient_basis,
                         const wavelet::Basis& chart_basis, const wavelet::CoeffMap& f,
                         std::span<const double> x) {
    std::vector<std::pair<wavelet::Index, double>> tail;
    for (const auto& [idx, v] : f)
        if (idx.level > model.J && v != 0.0) tail.emplace_back(idx, v);
    if (tail.empty()) return 0.0;

    const int d = model.cfg.d_Y;
    const double half = 2.0 * model.cfg.tau2 + chart_basis.support_length();
    const int res = model.cfg.quad_res;
    const double step = 2.0 * half / res;
    const double cell = std::pow(step, d);

    double total = 0.0;
    std::vector<double> z(static_cast<std::size_t>(d));
    std::vector<int> pos(static_cast<std::size_t>(d), 0);
    for (std::size_t c = 0; c < model.charts.size(); ++c) {
        std::fill(pos.begin(), pos.end(), 0);
        double acc = 0.0;
        for (;;) {
            for (int a = 0; a < d; ++a)
                z[static_cast<std::size_t>(a)] = -half + (pos[static_cast<std::size_t>(a)] + 0.5) * step;
            double dens = model.latent_density(c, z, x, chart_basis);
            if (dens != 0.0) {
                auto y = model.charts[c].decode(z, x, chart_basis);
                double ftail = 0.0;
                for (const auto& [idx, v] : tail) ftail += v * wavelet::evaluate(ambient_basis, idx, y);
                acc += ftail * dens;
            }
            int axis = 0;
            while (axis < d) {
                if (++pos[static_cast<std::size_t>(axis)] < res) break;
                pos[static_cast<std::size_t>(axis)] = 0;
                ++axis;
            }
            if (axis == d) break;
        }
        total += acc * cell;
    }
    return total;
}

double evaluate_J(const wavelet::CoeffMap& f, std::span<const double> x,
                  const std::vector<JointMeanModel>& joint_means, const MixtureModel& mixture,
                  const wavelet::Basis& ambient_basis, const wavelet::Basis& chart_basis) {
    int max_level = -1;
    for (const auto& jm : joint_means) max_level = std::max(max_level, jm.level);
    if (max_level != mixture.J)
        throw std::invalid_argument("evaluate_J: joint-mean levels and mixture truncation disagree");
    double coarse = 0.0;
    const auto& cfg = mixture.cfg;
    for (const auto& [idx, v] : f) {
        if (idx.level > mixture.J || v == 0.0) continue;
        for (const auto& jm : joint_means) {
            if (jm.level != idx.level) continue;
            double scale = std::pow(2.0, 0.5 * idx.level * (cfg.D_Y - cfg.d_Y));
            coarse += v * scale * jm.eval(ambient_basis, idx, x);
        }
    }
    return coarse + mixture_fine_term(mixture, ambient_basis, chart_basis, f, x);
}

std::vector<std::vector<double>> sample_mixture(const MixtureModel& model,
                                                const wavelet::Basis& chart_basis,
                                                std::span<const double> x, std::size_t count,
                                                std::uint64_t seed) {
    const int d = model.cfg.d_Y;
    const double half = 2.0 * model.cfg.tau2 + chart_basis.support_length();
    const int res = model.cfg.quad_res;
    const double step = 2.0 * half / res;
    const double cell = std::pow(step, d);

    // positive-part mass and a rigorous sup bound per chart
    std::vector<double> mass(model.charts.size(), 0.0), bound(model.charts.size(), 0.0);
    std::vector<double> z(static_cast<std::size_t>(d));
    for (std::size_t c = 0; c < model.charts.size(); ++c) {
        std::vector<int> pos(static_cast<std::size_t>(d), 0);
        double acc = 0.0;
        for (;;) {
            for (int a = 0; a < d; ++a)
                z[static_cast<std::size_t>(a)] = -half + (pos[static_cast<std::size_t>(a)] + 0.5) * step;
            acc += std::max(0.0, model.latent_density(c, z, x, chart_basis));
            int axis = 0;
            while (axis < d) {
                if (++pos[static_cast<std::size_t>(axis)] < res) break;
                pos[static_cast<std::size_t>(axis)] = 0;
                ++axis;
            }
            if (axis == d) break;
        }
        mass[c] = acc * cell;
        for (const auto& [idx, lp] : model.latent_tables[c]) {
            double v = lp.eval(x);
            if (v != 0.0) bound[c] += std::abs(v) * wavelet::index_sup(chart_basis, idx);
        }
    }
    double total = 0.0;
    for (double v : mass) total += v;
    if (total <= 0.0)
        throw std::runtime_error(
            "sample_mixture: clipped latent densities carry no positive mass at this covariate");

    Rng rng(seed, 0x317e);
    std::vector<std::vector<double>> out;
    out.reserve(count);
    while (out.size() < count) {
        double u = rng.uniform() * total;
        std::size_t c = 0;
        for (; c + 1 < mass.size(); ++c) {
            if (u < mass[c]) break;
            u -= mass[c];
        }
        // rejection against the rigorous bound
        for (std::size_t tries = 0; tries < 1000000; ++tries) {
            for (int a = 0; a < d; ++a) z[static_cast<std::size_t>(a)] = rng.uniform(-half, half);
            double dens = std::max(0.0, model.latent_density(c, z, x, chart_basis));
            if (dens > 0.0 && rng.uniform() * bound[c] <= dens) {
                out.push_back(model.charts[c].decode(z, x, chart_basis));
                break;
            }
            if (tries + 1 == 1000000)
                throw std::runtime_error("sample_mixture: rejection sampler starved");
        }
    }
    return out;
}

} // namespace distreg::latent
