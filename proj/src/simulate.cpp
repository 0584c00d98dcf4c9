#include "ldexpand/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <random>

#include "ldexpand/quadrature.hpp"

namespace ldexpand {

TiltedSimulator::TiltedSimulator(const ProcessModel& m, const TiltPath& z0, const SimConfig& cfg)
    : m_(m), z0_(z0), cfg_(cfg) {
    require(cfg.eps > 0.0, "eps must be positive");
    require(cfg.envelope_margin >= 1.0, "envelope margin must be at least 1");
    T_ = cfg.horizon(m);
    require(T_ >= 0.0, "horizon must be non-negative");
    const double dt = cfg.step(m);
    require(dt > 0.0, "mesh step must be positive");
    steps_ = T_ > 0.0 ? static_cast<std::size_t>(std::ceil(T_ / dt - 1e-9)) : 0;
    dt_ = steps_ ? T_ / static_cast<double>(steps_) : 0.0;
    xdep_ = m.x_dependent();
    tk_.resize(steps_ + 1);
    zk_.resize(steps_ + 1);
    for (std::size_t k = 0; k <= steps_; ++k) {
        tk_[k] = k == steps_ ? T_ : dt_ * static_cast<double>(k);
        zk_[k] = z0_(tk_[k]);
    }
    if (!xdep_) {
        rate_k_.resize(steps_ + 1);
        drift_k_.resize(steps_ + 1);
        a_k_.resize(steps_ + 1);
        g0_k_.resize(steps_ + 1);
        for (std::size_t k = 0; k <= steps_; ++k) {
            const double t = tk_[k];
            rate_k_[k] = rate(t, 0.0, zk_[k]);
            drift_k_[k] = drift(t, 0.0, zk_[k]);
            a_k_[k] = m.a(t, 0.0);
            g0_k_[k] = cumulant_g0(m, t, 0.0, zk_[k]);
        }
        for (std::size_t k = 0; k < steps_; ++k) g0_total_ += 0.5L * (g0_k_[k] + g0_k_[k + 1]) * dt_;
    }
    // state-dependent drift with a state-free jump measure: the jump part still tabulates
    nu_xdep_ = m.nu.x_dependent();
    if (xdep_ && !nu_xdep_) {
        rate_k_.resize(steps_ + 1);
        comp_k_.resize(steps_ + 1);
        for (std::size_t k = 0; k <= steps_; ++k) {
            rate_k_[k] = rate(tk_[k], 0.0, zk_[k]);
            comp_k_[k] = compensator(tk_[k], 0.0);
        }
    }
}

double TiltedSimulator::compensator(double t, double x) const {
    double c = 0.0;
    m_.nu.for_each_node(t, x, 0, [&](double u, double w) { c += w * u; });
    return c;
}

double TiltedSimulator::rate(double t, double x, double z) const {
    return m_.nu.empty() ? 0.0 : tilted_jump_mass(m_, t, x, z) / cfg_.eps;
}

// velocity between jumps: G_z - int u e^{zu} nu = alpha + a z - int u nu
double TiltedSimulator::drift(double t, double x, double z) const {
    return m_.alpha(t, x) + m_.a(t, x) * z - compensator(t, x);
}

double TiltedSimulator::draw_jump(double t, double x, double z, Xoshiro256& rng) const {
    if (!m_.nu.is_density()) {
        const auto& atoms = m_.nu.atom_list();
        double total = 0.0;
        double w[16];
        std::vector<double> wv;
        double* ws = w;
        if (atoms.size() > 16) {
            wv.resize(atoms.size());
            ws = wv.data();
        }
        for (std::size_t j = 0; j < atoms.size(); ++j) {
            ws[j] = atoms[j].weight(t, x) * std::exp(z * atoms[j].size);
            total += ws[j];
        }
        double r = rng.uniform() * total;
        for (std::size_t j = 0; j < atoms.size(); ++j) {
            r -= ws[j];
            if (r < 0.0) return atoms[j].size;
        }
        return atoms.back().size;
    }
    // rejection from a uniform proposal on [-U, U]
    const double U = m_.nu.support_bound();
    const int grid = 2 * m_.nu.quadrature_order() + 1;
    double bound = 0.0;
    for (int i = 0; i < grid; ++i) {
        const double u = -U + 2.0 * U * i / (grid - 1);
        bound = std::max(bound, m_.nu.density_value(t, x, u) * std::exp(z * u));
    }
    bound *= 1.25;
    require(bound > 0.0, "jump density vanishes where a jump was accepted");
    for (int tries = 0; tries < 100000; ++tries) {
        const double u = -U + 2.0 * U * rng.uniform();
        const double f = m_.nu.density_value(t, x, u) * std::exp(z * u);
        if (f > bound) bound = 1.25 * f;
        if (rng.uniform() * bound <= f) return u;
    }
    fail(Errc::EnvelopeExceeded, "jump size rejection sampler made no progress");
}

SamplePath TiltedSimulator::run(std::uint64_t path_index) const {
    SamplePath p;
    run(path_index, p);
    return p;
}

void TiltedSimulator::run(std::uint64_t path_index, SamplePath& out) const {
    out.times.clear();
    out.values.clear();
    out.jump.clear();
    out.n_jumps = 0;
    out.reserve(steps_ + 16);
    Xoshiro256 rng = stream(cfg_.seed, path_index, Purpose::Path);
    std::normal_distribution<double> normal;
    const double eps = cfg_.eps;
    const bool jumps = !m_.nu.empty();
    const bool tilted = !z0_.is_zero();
    const Coefficient* c = cfg_.reaction;

    double x = cfg_.start(m_);
    long double zdxi = 0.0L, g0dt = 0.0L, cdt = 0.0L;
    int retries = 0;
    out.push(0.0, x);

    auto close_segment = [&](double a, double b, double xs, double za, double zb) {
        if (b <= a) return;
        if (tilted && xdep_) g0dt += 0.5L * (cumulant_g0(m_, a, xs, za) + cumulant_g0(m_, b, xs, zb)) * (b - a);
        if (c) cdt += static_cast<long double>((*c)(a, xs)) * (b - a);
    };

    for (std::size_t k = 0; k < steps_; ++k) {
        const double t0 = tk_[k], t1 = tk_[k + 1], h = t1 - t0;
        const double z0v = zk_[k];
        double b;
        if (!xdep_)
            b = drift_k_[k];
        else if (nu_xdep_)
            b = drift(t0, x, z0v);
        else
            b = m_.alpha(t0, x) + m_.a(t0, x) * z0v - comp_k_[k];
        const double av = xdep_ ? m_.a(t0, x) : a_k_[k];
        if (av < 0.0) fail(Errc::NegativeDiffusion, "a(t,x) < 0 at t=" + std::to_string(t0));
        double dc = b * h;
        if (av > 0.0) dc += std::sqrt(eps * av * h) * normal(rng);
        zdxi += static_cast<long double>(z0v) * dc;

        const double x_start = x;
        double J = 0.0;
        double seg_t = t0, seg_x = x, seg_z = z0v;
        if (jumps) {
            const bool live = xdep_ && nu_xdep_;
            double lam_lo = live ? rate(t0, x, z0v) : rate_k_[k];
            double lam_hi = live ? rate(t1, x + dc, zk_[k + 1]) : rate_k_[k + 1];
            double Lambda = cfg_.envelope_margin * std::max(lam_lo, lam_hi);
            double tc = t0;
            while (Lambda > 0.0) {
                const double tau = tc - std::log(rng.uniform()) / Lambda;
                if (tau > t1) break;
                tc = tau;
                const double xt = x_start + dc * (tau - t0) / h + J;
                const double zt = z0_.is_constant() ? z0v : z0_(tau);
                const double lam = rate(tau, xt, zt);
                if (lam > Lambda) {
                    if (++retries > cfg_.retry_budget)
                        fail(Errc::EnvelopeExceeded, "jump rate outgrew its majorant more than " +
                                                         std::to_string(cfg_.retry_budget) + " times");
                    Lambda = cfg_.envelope_margin * lam;
                }
                if (rng.uniform() * Lambda > lam) continue;
                const double jump = eps * draw_jump(tau, xt, zt, rng);
                close_segment(seg_t, tau, seg_x, seg_z, zt);
                J += jump;
                zdxi += static_cast<long double>(zt) * jump;
                out.push(tau, xt + jump, jump);
                seg_t = tau;
                seg_x = xt + jump;
                seg_z = zt;
                if (live) Lambda = std::max(Lambda, cfg_.envelope_margin * rate(tau, seg_x, zt));
            }
        }
        x = x_start + dc + J;
        close_segment(seg_t, t1, seg_x, seg_z, zk_[k + 1]);
        out.push(t1, x);
    }
    if (tilted && !xdep_) g0dt = g0_total_;
    out.int_z_dxi = zdxi;
    out.int_g0_dt = g0dt;
    out.int_c_dt = cdt;
}

SamplePath simulate_original(const ProcessModel& m, const SimConfig& cfg, std::uint64_t path_index) {
    return TiltedSimulator(m, TiltPath(0.0), cfg).run(path_index);
}

SamplePath simulate_tilted(const ProcessModel& m, const TiltPath& z0, const SimConfig& cfg,
                           std::uint64_t path_index) {
    return TiltedSimulator(m, z0, cfg).run(path_index);
}

SamplePath rescale_to_eta(const SamplePath& path, const PathGrid& phi0, double eps) {
    require(eps > 0.0, "eps must be positive");
    const double s = 1.0 / std::sqrt(eps);
    SamplePath out;
    out.times = path.times;
    out.values.resize(path.values.size());
    out.jump.resize(path.jump.size());
    for (std::size_t k = 0; k < path.values.size(); ++k) {
        out.values[k] = (path.values[k] - phi0(path.times[k])) * s;
        out.jump[k] = path.jump[k] * s;
    }
    out.n_jumps = path.n_jumps;
    out.int_z_dxi = path.int_z_dxi;
    out.int_g0_dt = path.int_g0_dt;
    out.int_c_dt = path.int_c_dt;
    return out;
}

LimitDiffusion limit_diffusion(const std::function<double(double)>& A, const std::function<double(double)>& g,
                               double T, std::size_t steps) {
    require(T > 0.0 && steps >= 1, "limit diffusion needs T > 0 and at least one step");
    LimitDiffusion L;
    L.T = T;
    L.t.resize(steps + 1);
    L.m.resize(steps);
    L.s.resize(steps);
    const double h = T / static_cast<double>(steps);
    for (std::size_t k = 0; k <= steps; ++k) L.t[k] = k == steps ? T : h * static_cast<double>(k);
    for (std::size_t k = 0; k < steps; ++k) {
        const double t0 = L.t[k], t1 = L.t[k + 1], tm = 0.5 * (t0 + t1);
        const double a0 = A(t0), am = A(tm), a1 = A(t1);
        if (a0 < 0.0 || am < 0.0 || a1 < 0.0)
            fail(Errc::NegativeDiffusion, "limit diffusion coefficient A(t) < 0 near t=" + std::to_string(t0));
        const double g0 = g(t0), gm = g(tm), g1 = g(t1);
        const double G_full = simpson([&](double s) { return g(s); }, t0, t1, 2);
        const double G_half = (t1 - tm) / 6.0 * (gm + 4.0 * g(0.5 * (tm + t1)) + g1);
        (void)g0;
        L.m[k] = std::exp(G_full);
        const double var = (t1 - t0) / 6.0 * (std::exp(2.0 * G_full) * a0 + 4.0 * std::exp(2.0 * G_half) * am + a1);
        L.s[k] = std::sqrt(std::max(0.0, var));
    }
    return L;
}

SamplePath simulate_limit_eta(const std::function<double(double)>& A, const std::function<double(double)>& g,
                              const LimitConfig& cfg, double x_start, std::uint64_t path_index) {
    const LimitDiffusion L = limit_diffusion(A, g, cfg.T, cfg.steps);
    Xoshiro256 rng = stream(cfg.seed, path_index, Purpose::LimitPath);
    std::normal_distribution<double> normal;
    SamplePath p;
    p.reserve(cfg.steps + 1);
    double eta = x_start;
    p.push(0.0, eta);
    for (std::size_t k = 0; k < cfg.steps; ++k) {
        eta = L.m[k] * eta + L.s[k] * normal(rng);
        p.push(L.t[k + 1], eta);
    }
    return p;
}

double value_at(const SamplePath& p, double t) {
    const auto& ts = p.times;
    if (t <= ts.front()) return p.values.front();
    if (t >= ts.back()) return p.values.back();
    const std::size_t k = static_cast<std::size_t>(std::upper_bound(ts.begin(), ts.end(), t) - ts.begin()) - 1;
    if (ts[k] == t) return p.values[k];
    const double w = (t - ts[k]) / (ts[k + 1] - ts[k]);
    return p.values[k] + w * (p.left_limit(k + 1) - p.values[k]);
}

void write_path_csv(const SamplePath& p, const std::string& file) {
    std::FILE* f = std::fopen(file.c_str(), "w");
    if (!f) fail(Errc::InvalidArgument, "cannot open " + file + " for writing");
    std::fprintf(f, "t,value,is_jump,jump_size\n");
    for (std::size_t k = 0; k < p.times.size(); ++k)
        std::fprintf(f, "%.17g,%.17g,%d,%.17g\n", p.times[k], p.values[k], p.jump[k] != 0.0 ? 1 : 0, p.jump[k]);
    std::fclose(f);
}

}  // namespace ldexpand
