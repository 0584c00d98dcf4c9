#include "ldexpand/expansion.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <optional>
#include <random>

#include <Eigen/Dense>

#include "ldexpand/kernels.hpp"
#include "ldexpand/parallel.hpp"

namespace ldexpand {

namespace {

constexpr std::size_t kBlock = 256;

// runs fn(index, path) over n tilted paths in fixed blocks, one buffer per block
template <class Fn>
void for_each_tilted_path(const TiltedSimulator& sim, std::size_t n, int workers, Fn&& fn) {
    const std::size_t blocks = (n + kBlock - 1) / kBlock;
    parallel_for(blocks, workers, [&](std::size_t b) {
        SamplePath xi;
        const std::size_t end = std::min(n, (b + 1) * kBlock);
        for (std::size_t i = b * kBlock; i < end; ++i) {
            sim.run(i, xi);
            fn(i, xi);
        }
    });
}

double sup_deviation(const SamplePath& xi, const PathGrid& phi0) {
    double s = 0.0;
    for (std::size_t k = 0; k < xi.times.size(); ++k) {
        const double p = phi0(xi.times[k]);
        s = std::max(s, std::abs(xi.values[k] - p));
        if (xi.jump[k] != 0.0) s = std::max(s, std::abs(xi.left_limit(k) - p));
    }
    return s;
}

struct MeanSe {
    double mean = 0.0;
    double se = 0.0;
};

MeanSe mean_se(const std::vector<double>& v) {
    MeanSe r;
    const std::size_t n = v.size();
    if (n == 0) return r;
    long double s = 0.0L;
    for (double x : v) s += x;
    const long double mean = s / static_cast<long double>(n);
    long double ss = 0.0L;
    for (double x : v) ss += (x - mean) * (x - mean);
    r.mean = static_cast<double>(mean);
    r.se = n > 1 ? static_cast<double>(std::sqrt(ss / static_cast<long double>(n - 1) / static_cast<long double>(n)))
                 : 0.0;
    return r;
}

}  // namespace

double se_floor(double mean) { return 1e-12 * std::max(1.0, std::abs(mean)); }

std::uint64_t derive_seed(std::uint64_t root, std::uint64_t i) {
    std::uint64_t s = root ^ (0xa0761d6478bd642fULL * (i + 1));
    return splitmix64(s);
}

EstimateRecord estimate_prefactor(const ProcessModel& m, const FunctionalSpec& F, const FunctionalSpec& H,
                                  const ExtremalSolution& sol, double eps, const PrefactorOptions& opt) {
    require(eps > 0.0, "eps must be positive");
    require(opt.n >= 2, "need at least two samples");
    require(opt.h > 0.0, "localization radius must be positive");
    const PathGrid& phi0 = sol.phi0;
    const double gap = sol.best_gap();
    const double T = m.T;
    const double rs = std::sqrt(eps);

    SimConfig cfg;
    cfg.eps = eps;
    cfg.dt = opt.dt;
    cfg.seed = opt.seed;
    cfg.envelope_margin = opt.envelope_margin;
    const TiltedSimulator sim(m, sol.z0_path, cfg);

    std::optional<QCoefficients> qtab;
    try {
        qtab = q_coefficients(F, m, phi0, sol.z0_path, static_cast<std::size_t>(std::llround(T / cfg.step(m))), 4);
    } catch (const Error& e) {
        if (e.code() != Errc::GenericMeasureUnsupported && e.code() != Errc::UnsupportedOrder) throw;
    }

    const std::size_t n = opt.n;
    std::vector<double> sample(n), eta_t[3], q2(qtab ? n : 0), resid(qtab ? n : 0);
    for (auto& v : eta_t) v.resize(n);
    std::vector<char> clipped(n), tail(n);
    const double tq[3] = {0.25 * T, 0.5 * T, T};
    if (!opt.dump_dir.empty() && opt.dump_paths > 0) std::filesystem::create_directories(opt.dump_dir);

    for_each_tilted_path(sim, n, opt.workers, [&](std::size_t i, const SamplePath& xi) {
        const double dev = sup_deviation(xi, phi0);
        clipped[i] = dev >= opt.h;
        tail[i] = dev >= 1.0;  // sup |eta| >= eps^{-1/2}
        const long double E =
            (static_cast<long double>(eval_functional(F, xi)) - xi.int_z_dxi + xi.int_g0_dt - gap) / eps;
        const double Hv = eval_functional(H, xi);
        double s = 0.0;
        if (!clipped[i] && Hv != 0.0) s = Hv * static_cast<double>(std::exp(E));
        if (!std::isfinite(s))
            fail(Errc::DegenerateExponent, "non-finite importance weight at eps=" + std::to_string(eps));
        sample[i] = s;
        for (int k = 0; k < 3; ++k) eta_t[k][i] = (value_at(xi, tq[k]) - phi0(tq[k])) / rs;
        if (qtab) {
            const SamplePath eta = rescale_to_eta(xi, phi0, eps);
            const auto q = qtab->eval_all(eta);
            double taylor = q[2];
            if (qtab->max_order >= 3) taylor += rs * q[3];
            if (qtab->max_order >= 4) taylor += eps * q[4];
            q2[i] = q[2];
            resid[i] = static_cast<double>(E - taylor);
        }
        if (static_cast<long>(i) < opt.dump_paths && !opt.dump_dir.empty()) {
            char name[96];
            std::snprintf(name, sizeof name, "/path_eps%.6g_%05zu.csv", eps, i);
            write_path_csv(xi, opt.dump_dir + name);
        }
    });

    EstimateRecord rec;
    rec.eps = eps;
    rec.n_samples = static_cast<long>(n);
    rec.log_leading = gap / eps;
    rec.h = opt.h;
    for (std::size_t i = 0; i < n; ++i) {
        rec.n_clipped += clipped[i];
    }
    if (2 * rec.n_clipped > rec.n_samples)
        fail(Errc::DegenerateExponent, std::to_string(rec.n_clipped) + " of " + std::to_string(n) +
                                           " paths left the localization tube at eps=" + std::to_string(eps));
    const MeanSe p = mean_se(sample);
    rec.prefactor_mean = p.mean;
    rec.prefactor_se = std::max(p.se, se_floor(p.mean));
    long ntail = 0;
    for (char c : tail) ntail += c;
    rec.tail_fraction = static_cast<double>(ntail) / static_cast<double>(n);
    rec.tail_se = std::sqrt(rec.tail_fraction * (1.0 - rec.tail_fraction) / static_cast<double>(n));
    std::vector<double> tmp(n);
    for (int k = 0; k < 3; ++k) {
        for (std::size_t i = 0; i < n; ++i) tmp[i] = eta_t[k][i] * eta_t[k][i];
        rec.m2[k] = mean_se(tmp).mean;
        for (std::size_t i = 0; i < n; ++i) tmp[i] *= tmp[i];
        const MeanSe m4 = mean_se(tmp);
        rec.m4[k] = m4.mean;
        rec.m4_se[k] = m4.se;
    }
    if (qtab) {
        rec.q_order = qtab->max_order;
        rec.mean_q2 = mean_se(q2).mean;
        for (double& r : resid) r = std::abs(r);
        rec.mean_abs_taylor_residual = mean_se(resid).mean;
    }
    return rec;
}

K0Estimate estimate_k0(const FunctionalSpec& F, const FunctionalSpec& H, const ProcessModel& m,
                       const ExtremalSolution& sol, const K0Options& opt) {
    require(opt.n >= 2 && opt.steps >= 1, "need samples and steps");
    const PathGrid& phi0 = sol.phi0;
    const TiltPath& z0 = sol.z0_path;
    const double T = m.T;
    const bool xdep = m.x_dependent();
    auto A = [&](double t) {
        double gz = 0.0, gzz = 0.0;
        g0_dz_dzz(m, t, phi0(t), z0(t), gz, gzz);
        return gzz;
    };
    auto g = [&](double t) { return xdep ? g0_mixed(m, t, phi0(t), z0(t), 1, 1) : 0.0; };
    const LimitDiffusion L = limit_diffusion(A, g, T, opt.steps);
    const QCoefficients q = q_coefficients(F, m, phi0, z0, opt.steps, 3);

    K0Estimate out;
    out.h_phi0 = eval_functional(H, phi0);
    out.k1_available = q.max_order >= 3 && H.builtin();
    std::vector<double> c1(opt.steps + 1, 0.0);
    double d1 = 0.0;
    if (out.k1_available) {
        for (std::size_t k = 0; k <= opt.steps; ++k)
            for (const auto& term : H.integrals) c1[k] += term.g(L.t[k], phi0(L.t[k]), 1);
        for (const auto& term : H.terminals) d1 += term.h(phi0.terminal(), 1);
    }
    const bool need1 = out.k1_available && (!H.integrals.empty() || d1 != 0.0);
    const double d2 = q.d[2], d3 = out.k1_available ? q.d[3] : 0.0;

    const auto& K = kernels::active();
    constexpr std::size_t W = 64;
    const std::size_t n = opt.n, blocks = (n + W - 1) / W;
    std::vector<double> s0(n), s1(n);
    parallel_for(blocks, opt.workers, [&](std::size_t b) {
        const std::size_t base = b * W, cnt = std::min(W, n - base);
        std::vector<Xoshiro256> eng;
        eng.reserve(cnt);
        for (std::size_t j = 0; j < cnt; ++j) eng.push_back(stream(opt.seed, base + j, Purpose::LimitPath));
        std::vector<std::normal_distribution<double>> nd(cnt);
        alignas(32) double eta[W] = {}, z[W], acc2[W] = {}, acc3[W] = {}, acc1[W] = {};
        for (std::size_t k = 0; k < opt.steps; ++k) {
            for (std::size_t j = 0; j < cnt; ++j) z[j] = nd[j](eng[j]);
            K.affine_step(eta, z, L.m[k], L.s[k], cnt);
            // trapezoid on the uniform mesh; node 0 has eta = 0
            const double wk = (k + 1 == opt.steps ? 0.5 : 1.0) * (L.t[k + 1] - L.t[k]);
            const double w2 = wk * q.c[2][k + 1];
            const double w3 = out.k1_available ? wk * q.c[3][k + 1] : 0.0;
            K.power_accumulate(eta, w2, w3, acc2, acc3, cnt);
            if (need1)
                for (std::size_t j = 0; j < cnt; ++j) acc1[j] += wk * c1[k + 1] * eta[j];
        }
        for (std::size_t j = 0; j < cnt; ++j) {
            const double e = eta[j];
            const double Q2 = acc2[j] + d2 * e * e;
            const double ex = std::exp(Q2);
            s0[base + j] = ex;
            if (out.k1_available) {
                const double Q3 = acc3[j] + d3 * e * e * e;
                const double H1 = acc1[j] + d1 * e;
                s1[base + j] = ex * (Q3 * out.h_phi0 + H1);
            }
        }
    });
    const MeanSe e0 = mean_se(s0);
    out.value = out.h_phi0 * e0.mean;
    out.se = std::max(std::abs(out.h_phi0) * e0.se, out.h_phi0 != 0.0 ? se_floor(out.value) : 0.0);
    if (out.k1_available) {
        const MeanSe e1 = mean_se(s1);
        out.k1_gauss = e1.mean;
        out.k1_gauss_se = std::max(e1.se, se_floor(e1.mean));
    }
    return out;
}

CoefficientFit fit_coefficients(const std::vector<EstimateRecord>& records) {
    require(records.size() >= 2, "fit needs at least two estimates");
    const Eigen::Index r = static_cast<Eigen::Index>(records.size());
    const int p = records.size() >= 4 ? 3 : 2;
    Eigen::MatrixXd X(r, p), Xw(r, p);
    Eigen::VectorXd y(r), yw(r);
    CoefficientFit fit;
    fit.n_terms = p;
    for (Eigen::Index i = 0; i < r; ++i) {
        const auto& rec = records[static_cast<std::size_t>(i)];
        fit.eps.push_back(rec.eps);
        const double se = std::max(rec.prefactor_se, se_floor(rec.prefactor_mean));
        X(i, 0) = 1.0;
        X(i, 1) = std::sqrt(rec.eps);
        if (p == 3) X(i, 2) = rec.eps;
        y[i] = rec.prefactor_mean;
        Xw.row(i) = X.row(i) / se;
        yw[i] = y[i] / se;
    }
    Eigen::JacobiSVD<Eigen::MatrixXd> plain(X);
    const auto sv = plain.singularValues();
    fit.condition = sv[sv.size() - 1] > 0.0 ? sv[0] / sv[sv.size() - 1] : std::numeric_limits<double>::infinity();
    if (!(fit.condition <= 1e8))
        fail(Errc::FitIllConditioned, "design matrix condition number " + std::to_string(fit.condition));
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(Xw, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const Eigen::VectorXd beta = svd.solve(yw);
    const Eigen::VectorXd s = svd.singularValues();
    const Eigen::MatrixXd V = svd.matrixV();
    const Eigen::MatrixXd cov = V * s.cwiseInverse().cwiseAbs2().asDiagonal() * V.transpose();
    fit.K0 = beta[0];
    fit.K1 = beta[1];
    fit.K0_se = std::sqrt(cov(0, 0));
    fit.K1_se = std::sqrt(cov(1, 1));
    fit.cov01 = cov(0, 1);
    if (p == 3) {
        fit.K2 = beta[2];
        fit.K2_se = std::sqrt(cov(2, 2));
    }
    const Eigen::VectorXd res = y - X * beta;
    for (Eigen::Index i = 0; i < r; ++i) {
        fit.residuals.push_back(res[i]);
        const double se = std::max(records[static_cast<std::size_t>(i)].prefactor_se,
                                   se_floor(records[static_cast<std::size_t>(i)].prefactor_mean));
        fit.chi2 += (res[i] / se) * (res[i] / se);
    }
    return fit;
}

SweepResult epsilon_sweep(const ProcessModel& m, const FunctionalSpec& F, const FunctionalSpec& H,
                          const ExtremalSolution& sol, const SweepOptions& opt) {
    require(opt.eps_grid.size() >= 3, "sweep needs at least three eps values");
    for (std::size_t i = 1; i < opt.eps_grid.size(); ++i)
        require(opt.eps_grid[i] < opt.eps_grid[i - 1], "eps grid must be decreasing");
    SweepResult out;
    for (std::size_t i = 0; i < opt.eps_grid.size(); ++i) {
        PrefactorOptions po = opt.prefactor;
        po.seed = derive_seed(opt.prefactor.seed, i);
        out.records.push_back(estimate_prefactor(m, F, H, sol, opt.eps_grid[i], po));
    }
    out.fit = fit_coefficients(out.records);
    K0Options ko = opt.k0;
    ko.seed = derive_seed(opt.k0.seed, 1000);
    out.k0 = estimate_k0(F, H, m, sol, ko);
    return out;
}

RoughLdReport rough_ld_check(const std::vector<EstimateRecord>& records, double gap) {
    require(records.size() >= 2, "rough LD check needs at least two estimates");
    RoughLdReport rep;
    for (const auto& r : records) {
        RoughLdRow row;
        row.eps = r.eps;
        row.deviation = r.prefactor_mean > 0.0 ? r.eps * std::log(r.prefactor_mean)
                                               : std::numeric_limits<double>::quiet_NaN();
        row.eps_log_total = gap + row.deviation;
        row.se = r.prefactor_mean > 0.0 ? r.eps * r.prefactor_se / r.prefactor_mean : 0.0;
        rep.rows.push_back(row);
    }
    auto within = [](const RoughLdRow& a, const RoughLdRow& b) {
        return std::abs(b.deviation) <= std::abs(a.deviation) + 2.0 * std::hypot(a.se, b.se) + 1e-12;
    };
    rep.shrinks = within(rep.rows.front(), rep.rows.back());
    rep.monotone_in_bands = true;
    for (std::size_t i = 1; i < rep.rows.size(); ++i) rep.monotone_in_bands &= within(rep.rows[i - 1], rep.rows[i]);
    return rep;
}

TailEstimate tail_probability(const ProcessModel& m, const ExtremalSolution& sol, double eps, std::size_t n,
                              std::uint64_t seed, double radius, int workers) {
    require(eps > 0.0 && n >= 1, "need eps > 0 and samples");
    if (radius < 0.0) radius = 1.0 / std::sqrt(eps);
    if (radius == 0.0) return {1.0, 0.0};
    if (std::isinf(radius)) return {0.0, 0.0};
    SimConfig cfg;
    cfg.eps = eps;
    cfg.seed = seed;
    const TiltedSimulator sim(m, sol.z0_path, cfg);
    const double thr = radius * std::sqrt(eps);
    std::vector<char> hit(n);
    for_each_tilted_path(sim, n, workers,
                         [&](std::size_t i, const SamplePath& xi) { hit[i] = sup_deviation(xi, sol.phi0) >= thr; });
    long c = 0;
    for (char h : hit) c += h;
    TailEstimate t;
    t.fraction = static_cast<double>(c) / static_cast<double>(n);
    t.se = std::sqrt(t.fraction * (1.0 - t.fraction) / static_cast<double>(n));
    return t;
}

MomentTable moment_check(const ProcessModel& m, const ExtremalSolution& sol, int k,
                         const std::vector<double>& eps_grid, std::size_t n, std::uint64_t seed, int workers) {
    require(k >= 0 && k <= 8 && k % 2 == 0, "moment order must be even and at most 8");
    require(!eps_grid.empty() && n >= 2, "need eps values and samples");
    MomentTable tab;
    tab.k = k;
    const double T = m.T;
    const double tq[3] = {0.25 * T, 0.5 * T, T};
    for (std::size_t e = 0; e < eps_grid.size(); ++e) {
        const double eps = eps_grid[e];
        if (k == 0) {
            for (double t : tq) tab.rows.push_back({eps, t, 1.0, 0.0});
            continue;
        }
        SimConfig cfg;
        cfg.eps = eps;
        cfg.seed = derive_seed(seed, e);
        const TiltedSimulator sim(m, sol.z0_path, cfg);
        std::vector<double> v[3];
        for (auto& x : v) x.resize(n);
        const double rs = std::sqrt(eps);
        for_each_tilted_path(sim, n, workers, [&](std::size_t i, const SamplePath& xi) {
            for (int j = 0; j < 3; ++j) v[j][i] = std::pow(std::abs(value_at(xi, tq[j]) - sol.phi0(tq[j])) / rs, k);
        });
        for (int j = 0; j < 3; ++j) {
            const MeanSe ms = mean_se(v[j]);
            tab.rows.push_back({eps, tq[j], ms.mean, ms.se});
        }
    }
    tab.bounded = true;
    for (const auto& row : tab.rows) {
        const auto ref = std::find_if(tab.rows.begin(), tab.rows.end(), [&](const MomentRow& r) { return r.t == row.t; });
        if (row.moment > 3.0 * ref->moment) tab.bounded = false;
    }
    return tab;
}

SamplePath tilde_eta_transform(const SamplePath& path, const std::function<double(double)>& g) {
    SamplePath out = path;
    double I = 0.0;
    for (std::size_t k = 0; k < path.times.size(); ++k) {
        if (k > 0) I += simpson(g, path.times[k - 1], path.times[k], 2);
        const double f = std::exp(-I);
        out.values[k] = path.values[k] * f;
        out.jump[k] = path.jump[k] * f;
    }
    return out;
}

}  // namespace ldexpand
