#include "distreg/regime1.hpp"

#include "distreg/linalg.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace distreg::regime1 {

int truncation_level_for_ratio(double ratio, double alpha_Y, double alpha_X, int D_Y, int d_X) {
    double denom = 2.0 * alpha_Y + D_Y + d_X * alpha_Y / alpha_X;
    double j = std::log2(std::max(ratio, 1.0)) / denom;
    return std::max(0, static_cast<int>(std::ceil(j - 1e-12)));
}

int truncation_level(std::size_t n, double alpha_Y, double alpha_X, int D_Y, int d_X) {
    if (n < 3) throw std::invalid_argument("truncation_level: need n >= 3");
    double ratio = static_cast<double>(n) / std::log(static_cast<double>(n));
    return truncation_level_for_ratio(ratio, alpha_Y, alpha_X, D_Y, d_X);
}

double bandwidth_for_ratio(int level, double ratio, double alpha_X, int d_X, int response_dim) {
    double e = 1.0 / (2.0 * alpha_X + d_X);
    return std::pow(2.0, level * response_dim * e) * std::pow(ratio, -e);
}

double bandwidth_x(int level, std::size_t n, double alpha_X, int d_X, int response_dim) {
    double ratio = static_cast<double>(n) / std::log(std::max<double>(n, 3.0));
    return bandwidth_for_ratio(level, ratio, alpha_X, d_X, response_dim);
}

Regime1Model Regime1Model::fit(const Dataset& data, const Regime1Config& cfg) {
    if (data.size() == 0) throw std::invalid_argument("regime1 fit: empty dataset");
    if (data.y_dim != cfg.D_Y) throw std::invalid_argument("regime1 fit: response dimension mismatch");
    std::string offenders;
    int bad = 0;
    for (std::size_t i = 0; i < data.size(); ++i) {
        if (linalg::norm(data.y(i)) > cfg.L) {
            if (bad < 5) offenders += (offenders.empty() ? "" : ", ") + std::to_string(i);
            ++bad;
        }
    }
    if (bad > 0)
        throw std::invalid_argument("regime1 fit: " + std::to_string(bad) +
                                    " responses outside B(0, L), rows " + offenders);

    Regime1Model m;
    m.cfg_ = cfg;
    m.basis_ = wavelet::Basis::build(cfg.basis);
    m.n_ = data.size();
    const std::size_t n = data.size();
    m.J_ = cfg.override_J >= 0
               ? cfg.override_J
               : (n >= 3 ? truncation_level(n, cfg.alpha_Y, cfg.alpha_X, cfg.D_Y, cfg.d_X) : 0);

    std::vector<std::vector<double>> xs(n);
    for (std::size_t i = 0; i < n; ++i) xs[i].assign(data.x(i).begin(), data.x(i).end());

    std::vector<double> resp(n);
    m.levels_.resize(static_cast<std::size_t>(m.J_) + 1);
    for (int j = 0; j <= m.J_; ++j) {
        double eps = bandwidth_x(j, n, cfg.alpha_X, cfg.d_X, cfg.D_Y);
        std::size_t target = static_cast<std::size_t>(
            std::ceil(cfg.centers_scale * std::pow(eps, -cfg.d_X)));
        auto centers = smoothers::greedy_packing(xs, eps, std::max<std::size_t>(target, 1));
        auto design = smoothers::LocalPolyDesign::build(xs, std::move(centers), eps, cfg.alpha_X,
                                                        1.0 / static_cast<double>(n));
        double cap = cfg.cap_scale * std::pow(2.0, -0.5 * cfg.D_Y * j);
        for (const auto& idx : wavelet::enumerate_indices(m.basis_, j, cfg.D_Y, cfg.L)) {
            bool any = false;
            for (std::size_t i = 0; i < n; ++i) {
                resp[i] = wavelet::evaluate(m.basis_, idx, data.y(i));
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
            m.levels_[static_cast<std::size_t>(j)].emplace_back(idx, std::move(fitted));
        }
    }
    return m;
}

std::size_t Regime1Model::stored_indices() const {
    std::size_t c = 0;
    for (const auto& lvl : levels_) c += lvl.size();
    return c;
}

double Regime1Model::coefficient(const wavelet::Index& idx, std::span<const double> x) const {
    if (idx.level < 0 || idx.level > J_) return 0.0;
    for (const auto& [stored, model] : levels_[static_cast<std::size_t>(idx.level)])
        if (stored == idx) return model.eval(x);
    return 0.0;
}

wavelet::CoeffMap Regime1Model::coefficients(std::span<const double> x) const {
    wavelet::CoeffMap out;
    for (const auto& lvl : levels_)
        for (const auto& [idx, model] : lvl) {
            double v = model.eval(x);
            if (v != 0.0) out[idx] = v;
        }
    return out;
}

double Regime1Model::eval_density(std::span<const double> y, std::span<const double> x) const {
    double acc = 0.0;
    for (const auto& lvl : levels_)
        for (const auto& [idx, model] : lvl) {
            double psi = wavelet::evaluate(basis_, idx, y);
            if (psi != 0.0) acc += model.eval(x) * psi;
        }
    return acc;
}

double Regime1Model::mean_functional(const wavelet::CoeffMap& f, std::span<const double> x) const {
    double acc = 0.0;
    for (const auto& lvl : levels_)
        for (const auto& [idx, model] : lvl) {
            auto it = f.find(idx);
            if (it != f.end() && it->second != 0.0) acc += it->second * model.eval(x);
        }
    return acc;
}

namespace {

void put(std::ofstream& out, double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    out << buf;
}

} // namespace

void Regime1Model::save(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open for write: " + path);
    out << "regime1-model 1\n";
    out << "params ";
    put(out, cfg_.alpha_Y);
    out << ' ';
    put(out, cfg_.alpha_X);
    out << ' ' << cfg_.D_Y << ' ' << cfg_.d_X << ' ';
    put(out, cfg_.L);
    out << ' ';
    put(out, cfg_.cap_scale);
    out << ' ';
    put(out, cfg_.centers_scale);
    out << '\n';
    out << "basis " << cfg_.basis.order << ' ' << cfg_.basis.regularity << ' '
        << cfg_.basis.resolution << '\n';
    out << "fit " << J_ << ' ' << n_ << '\n';
    for (std::size_t j = 0; j < levels_.size(); ++j) {
        out << "level " << j << ' ' << levels_[j].size() << '\n';
        for (const auto& [idx, model] : levels_[j]) {
            out << "index " << idx.level << ' ' << idx.type;
            for (int k : idx.shift) out << ' ' << k;
            out << '\n';
            out << "model " << model.centers.size() << ' ' << model.powers.size() << ' ';
            put(out, model.bandwidth);
            out << ' ';
            put(out, model.floor_term);
            out << ' ';
            put(out, model.cap);
            out << '\n';
            for (const auto& c : model.centers) {
                for (std::size_t a = 0; a < c.size(); ++a) {
                    if (a) out << ' ';
                    put(out, c[a]);
                }
                out << '\n';
            }
            for (const auto& p : model.powers) {
                for (std::size_t a = 0; a < p.size(); ++a) {
                    if (a) out << ' ';
                    out << p[a];
                }
                out << '\n';
            }
            for (std::size_t a = 0; a < model.coef.size(); ++a) {
                if (a) out << ' ';
                put(out, model.coef[a]);
            }
            out << '\n';
        }
    }
}

Regime1Model Regime1Model::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open for read: " + path);
    std::string tag;
    int version;
    in >> tag >> version;
    if (tag != "regime1-model") throw std::runtime_error("not a regime1 model file: " + path);
    Regime1Model m;
    in >> tag >> m.cfg_.alpha_Y >> m.cfg_.alpha_X >> m.cfg_.D_Y >> m.cfg_.d_X >> m.cfg_.L >>
        m.cfg_.cap_scale >> m.cfg_.centers_scale;
    in >> tag >> m.cfg_.basis.order >> m.cfg_.basis.regularity >> m.cfg_.basis.resolution;
    in >> tag >> m.J_ >> m.n_;
    m.basis_ = wavelet::Basis::build(m.cfg_.basis);
    m.levels_.assign(static_cast<std::size_t>(m.J_) + 1, {});
    std::string key;
    while (in >> key) {
        if (key != "level") throw std::runtime_error("malformed model file near: " + key);
        std::size_t j, count;
        in >> j >> count;
        for (std::size_t t = 0; t < count; ++t) {
            wavelet::Index idx;
            in >> key >> idx.level >> idx.type;
            idx.shift.resize(static_cast<std::size_t>(m.cfg_.D_Y));
            for (auto& k : idx.shift) in >> k;
            smoothers::LocalPolyModel model;
            std::size_t W, P;
            in >> key >> W >> P >> model.bandwidth >> model.floor_term >> model.cap;
            model.centers.assign(W, std::vector<double>());
            {
                std::string rest;
                std::getline(in, rest); // consume end of the model line
            }
            for (std::size_t w = 0; w < W; ++w) {
                std::string line;
                std::getline(in, line);
                std::stringstream ss(line);
                double v;
                while (ss >> v) model.centers[w].push_back(v);
            }
            model.powers.assign(P, std::vector<int>());
            for (std::size_t p = 0; p < P; ++p) {
                std::string line;
                std::getline(in, line);
                std::stringstream ss(line);
                int v;
                while (ss >> v) model.powers[p].push_back(v);
            }
            model.coef.resize(W * P);
            for (auto& c : model.coef) in >> c;
            m.levels_[j].emplace_back(std::move(idx), std::move(model));
        }
    }
    return m;
}

} // namespace distreg::regime1
