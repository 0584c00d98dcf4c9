#include "ldexpand/variational.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <Eigen/Eigenvalues>

#include "ldexpand/legendre.hpp"
#include "ldexpand/optimizer.hpp"
#include "ldexpand/parallel.hpp"

namespace ldexpand {

namespace {

constexpr double kGs[3] = {0.1127016653792583, 0.5, 0.8872983346207417};
constexpr double kGw[3] = {5.0 / 18.0, 8.0 / 18.0, 5.0 / 18.0};

// F - S on the grid, its gradient in (phi_1..phi_n) and the tridiagonal Hessian.
class DirectProblem {
public:
    DirectProblem(const FunctionalSpec& F, const ProcessModel& m, std::size_t n)
        : F_(F), m_(m), n_(n), T_(m.T), h_(m.T / static_cast<double>(n)), zc_(n, 0.0) {}

    double h() const { return h_; }
    bool analytic() const { return F_.builtin(); }
    const std::vector<double>& z() const { return zc_; }

    PathGrid path(const Eigen::VectorXd& v) const {
        PathGrid p(T_, n_);
        for (std::size_t i = 0; i < n_; ++i) p.phi[i + 1] = v[static_cast<Eigen::Index>(i)];
        return p;
    }

    // returns false for infinite action
    bool eval(const Eigen::VectorXd& v, double& J, Eigen::VectorXd& grad, Eigen::VectorXd* diag = nullptr,
              Eigen::VectorXd* off = nullptr) {
        const PathGrid p = path(v);
        const auto N = static_cast<Eigen::Index>(n_);
        grad.setZero(N);
        if (diag) diag->setZero(N);
        if (off) off->setZero(N > 0 ? N - 1 : 0);
        const bool xdep = m_.x_dependent();
        double S = 0.0;
        // dJ/dphi_k lives at grad[k-1]; phi_0 is pinned
        auto gadd = [&](std::size_t k, double v) {
            if (k > 0) grad[static_cast<Eigen::Index>(k - 1)] += v;
        };
        auto dadd = [&](std::size_t k, double v) {
            if (diag && k > 0) (*diag)[static_cast<Eigen::Index>(k - 1)] += v;
        };
        auto oadd = [&](std::size_t k, double v) {  // couples phi_k and phi_{k+1}
            if (off && k > 0) (*off)[static_cast<Eigen::Index>(k - 1)] += v;
        };
        for (std::size_t i = 0; i < n_; ++i) {
            const double t = p.t(i) + 0.5 * h_;
            const double y = 0.5 * (p.phi[i] + p.phi[i + 1]);
            const double u = p.slope(i);
            LegendreOptions lo;
            lo.z_start = zc_[i];
            LegendreResult r;
            try {
                r = h0(m_, t, y, u, lo);
            } catch (const Error& e) {
                if (e.code() == Errc::Unbounded || e.code() == Errc::Overflow) return false;
                throw;
            }
            // the gradient is +-z/h per node, so z needs more than the Legendre tolerance
            double z = r.argmax_z;
            for (int it = 0; it < 2; ++it) {
                double gz = 0.0, gzz = 0.0;
                g0_dz_dzz(m_, t, y, z, gz, gzz);
                if (!(gzz > 0.0) || gz == u) break;
                z -= (gz - u) / gzz;
            }
            zc_[i] = z;
            S += h_ * (z * u - cumulant_g0(m_, t, y, z));
            const double Hx = xdep ? -g0_mixed(m_, t, y, z, 0, 1) : 0.0;
            gadd(i, -(0.5 * h_ * Hx - z));
            gadd(i + 1, -(0.5 * h_ * Hx + z));
            if (diag) {
                double gzz = 0.0, gz = 0.0;
                g0_dz_dzz(m_, t, y, z, gz, gzz);
                if (!(gzz > 0.0)) {
                    diag_ok_ = false;
                    continue;
                }
                const double gzx = xdep ? g0_mixed(m_, t, y, z, 1, 1) : 0.0;
                const double gxx = xdep ? g0_mixed(m_, t, y, z, 0, 2) : 0.0;
                const double Huu = 1.0 / gzz, Hxu = -gzx / gzz, Hxx = -gxx + gzx * gzx / gzz;
                const double Saa = h_ * (0.25 * Hxx - Hxu / h_ + Huu / (h_ * h_));
                const double Sbb = h_ * (0.25 * Hxx + Hxu / h_ + Huu / (h_ * h_));
                const double Sab = h_ * (0.25 * Hxx - Huu / (h_ * h_));
                dadd(i, -Saa);
                dadd(i + 1, -Sbb);
                oadd(i, -Sab);
            }
        }
        double Fv = F_.constant;
        for (const auto& term : F_.integrals) {
            for (std::size_t i = 0; i < n_; ++i) {
                const double t0 = p.t(i), dy = p.phi[i + 1] - p.phi[i];
                for (int q = 0; q < 3; ++q) {
                    const double s = kGs[q], w = kGw[q] * h_;
                    const double t = t0 + s * h_, y = p.phi[i] + s * dy;
                    Fv += w * term.g(t, y, 0);
                    const double g1 = term.g(t, y, 1);
                    gadd(i, w * g1 * (1.0 - s));
                    gadd(i + 1, w * g1 * s);
                    if (diag) {
                        const double g2 = term.g(t, y, 2);
                        dadd(i, w * g2 * (1.0 - s) * (1.0 - s));
                        dadd(i + 1, w * g2 * s * s);
                        oadd(i, w * g2 * s * (1.0 - s));
                    }
                }
            }
        }
        for (const auto& term : F_.terminals) {
            Fv += term.h(p.terminal(), 0);
            gadd(n_, term.h(p.terminal(), 1));
            dadd(n_, term.h(p.terminal(), 2));
        }
        if (!F_.generics.empty()) {
            FunctionalSpec gen;
            gen.generics = F_.generics;
            Fv += eval_functional(gen, p);
            // central differences for opaque terms
            for (std::size_t k = 1; k <= n_; ++k) {
                PathGrid q = p;
                const double step = 1e-6 * std::max(1.0, std::abs(p.phi[k]));
                q.phi[k] = p.phi[k] + step;
                const double fp = eval_functional(gen, q);
                q.phi[k] = p.phi[k] - step;
                const double fm = eval_functional(gen, q);
                gadd(k, (fp - fm) / (2.0 * step));
            }
        }
        J = Fv - S;
        return true;
    }

    bool hessian_ok() const { return diag_ok_; }
    void reset_hessian_flag() { diag_ok_ = true; }

private:
    const FunctionalSpec& F_;
    const ProcessModel& m_;
    std::size_t n_;
    double T_, h_;
    std::vector<double> zc_;
    bool diag_ok_ = true;
};

// Solves A x = b for symmetric tridiagonal A; false if A is not positive definite.
bool thomas_spd(const Eigen::VectorXd& d, const Eigen::VectorXd& e, const Eigen::VectorXd& b, Eigen::VectorXd& x) {
    const Eigen::Index n = d.size();
    Eigen::VectorXd c(n), r(n);
    double piv = d[0];
    if (!(piv > 0.0)) return false;
    c[0] = n > 1 ? e[0] / piv : 0.0;
    r[0] = b[0] / piv;
    for (Eigen::Index i = 1; i < n; ++i) {
        piv = d[i] - e[i - 1] * c[i - 1];
        if (!(piv > 0.0)) return false;
        c[i] = i + 1 < n ? e[i] / piv : 0.0;
        r[i] = (b[i] - e[i - 1] * r[i - 1]) / piv;
    }
    x.resize(n);
    x[n - 1] = r[n - 1];
    for (Eigen::Index i = n - 2; i >= 0; --i) x[i] = r[i] - c[i] * x[i + 1];
    return true;
}

struct StartResult {
    bool feasible = false;
    bool converged = false;
    double J = 0.0;
    double grad = 0.0;  // max |grad| / h
    int iterations = 0;
    PathGrid path;
    std::vector<double> z;
    double max_eig = 0.0;
};

StartResult run_start(const FunctionalSpec& F, const ProcessModel& m, const DirectOptions& opt, const PathGrid& init) {
    DirectProblem prob(F, m, opt.n);
    const double h = prob.h();
    const double tol = F.builtin() ? opt.grad_tol : std::max(opt.grad_tol, 1e-7);
    Eigen::VectorXd v(static_cast<Eigen::Index>(opt.n));
    for (std::size_t i = 0; i < opt.n; ++i) v[static_cast<Eigen::Index>(i)] = init.phi[i + 1];

    StartResult out;
    LbfgsOptions lo;
    lo.grad_tol = (prob.analytic() ? std::max(1e3 * tol, 1e-5) : std::max(1e3 * tol, 1e-8)) * h;
    lo.rel_f_tol = 0.0;
    // with an analytic Hessian a short L-BFGS warm-up is enough; Newton does the rest
    if (prob.analytic()) lo.max_iterations = 50;
    auto obj = [&](const Eigen::VectorXd& x, double& f, Eigen::VectorXd& g) { return prob.eval(x, f, g); };
    LbfgsResult lr = lbfgs_maximize(obj, v, lo);
    if (!lr.feasible) return out;
    out.feasible = true;
    out.iterations = lr.iterations;
    v = lr.x;

    // Newton polish on the tridiagonal Hessian
    Eigen::VectorXd g, d, e, step;
    double J = 0.0;
    prob.reset_hessian_flag();
    if (!prob.eval(v, J, g, &d, &e)) return out;
    double g_prev = g.cwiseAbs().maxCoeff() / h;
    for (int it = 0; it < 200 && prob.analytic(); ++it) {
        if (g.cwiseAbs().maxCoeff() / h <= tol) break;
        if (!prob.hessian_ok() || !thomas_spd(-d, -e, g, step)) break;
        double lam = 1.0;
        bool moved = false;
        for (int b = 0; b < 30; ++b) {
            Eigen::VectorXd vn = v + lam * step, gn, dn, en;
            double Jn = 0.0;
            prob.reset_hessian_flag();
            if (prob.eval(vn, Jn, gn, &dn, &en) &&
                (Jn >= J - 1e-15 * std::max(1.0, std::abs(J)) || gn.cwiseAbs().maxCoeff() < g.cwiseAbs().maxCoeff())) {
                v = vn;
                J = Jn;
                g = gn;
                d = dn;
                e = en;
                moved = true;
                break;
            }
            lam *= 0.5;
        }
        ++out.iterations;
        if (!moved) break;
        // rounding floor: stop once a full step no longer halves the gradient
        const double gn = g.cwiseAbs().maxCoeff() / h;
        if (gn <= 1e-9 && gn > 0.5 * g_prev) break;
        g_prev = gn;
    }
    prob.reset_hessian_flag();
    prob.eval(v, J, g, &d, &e);
    out.J = J;
    out.grad = g.cwiseAbs().maxCoeff() / h;
    out.converged = out.grad <= (prob.analytic() ? std::max(tol, 1e-9) : 1e3 * tol);
    out.path = prob.path(v);
    out.z = prob.z();
    if (prob.hessian_ok() && opt.n >= 2) {
        Eigen::VectorXd dd = d / h, ee = e / h;
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es;
        es.computeFromTridiagonal(dd, ee, Eigen::EigenvaluesOnly);
        out.max_eig = es.eigenvalues().maxCoeff();
    } else {
        out.max_eig = std::numeric_limits<double>::quiet_NaN();
    }
    return out;
}

std::vector<PathGrid> default_starts(double T, std::size_t n, int count) {
    std::vector<PathGrid> starts;
    for (int k = 0; k < count; ++k) {
        PathGrid p(T, n);
        const int kind = k % 5;
        const double amp = 0.5 * (1 + k / 5);
        for (std::size_t i = 0; i <= n; ++i) {
            const double s = p.t(i) / T;
            switch (kind) {
                case 0: p.phi[i] = k == 0 ? 0.0 : 0.1 * amp * s; break;
                case 1: p.phi[i] = amp * s; break;
                case 2: p.phi[i] = -amp * s; break;
                case 3: p.phi[i] = amp * std::sin(std::numbers::pi * s); break;
                case 4: p.phi[i] = -amp * std::sin(std::numbers::pi * s); break;
            }
        }
        starts.push_back(std::move(p));
    }
    return starts;
}

double terminal_z(const std::vector<double>& z) {
    if (z.size() < 2) return z.empty() ? 0.0 : z.back();
    const double a = z[z.size() - 1], b = z[z.size() - 2];
    return a + 0.5 * (a - b);
}

}  // namespace

ActionValue action_s(const ProcessModel& m, const PathGrid& path) {
    require(path.n() >= 1, "action needs at least one interval");
    double s = 0.0;
    LegendreOptions lo;
    for (std::size_t i = 0; i < path.n(); ++i) {
        const double t = path.t(i) + 0.5 * path.h();
        const double y = 0.5 * (path.phi[i] + path.phi[i + 1]);
        try {
            const auto r = h0(m, t, y, path.slope(i), lo);
            lo.z_start = r.argmax_z;
            s += path.h() * r.value;
        } catch (const Error& e) {
            if (e.code() == Errc::Unbounded || e.code() == Errc::Overflow) return ActionValue::inf();
            throw;
        }
    }
    return {false, s};
}

std::vector<double> extract_z0(const ProcessModel& m, const PathGrid& phi0) {
    std::vector<double> z(phi0.n());
    LegendreOptions lo;
    for (std::size_t i = 0; i < phi0.n(); ++i) {
        const double t = phi0.t(i) + 0.5 * phi0.h();
        z[i] = dh0_du(m, t, 0.5 * (phi0.phi[i] + phi0.phi[i + 1]), phi0.slope(i), lo);
        lo.z_start = z[i];
    }
    return z;
}

TiltPath tilt_path_from_midpoints(const PathGrid& phi0, const std::vector<double>& z_mid) {
    require(z_mid.size() == phi0.n(), "one tilt value per interval");
    if (z_mid.size() == 1) return TiltPath(z_mid[0]);
    std::vector<double> knots(z_mid.size());
    for (std::size_t i = 0; i < knots.size(); ++i) knots[i] = phi0.t(i) + 0.5 * phi0.h();
    bool constant = std::all_of(z_mid.begin(), z_mid.end(), [&](double v) { return v == z_mid[0]; });
    if (constant) return TiltPath(z_mid[0]);
    return TiltPath(std::move(knots), z_mid);
}

ExtremalSolution maximize_direct(const FunctionalSpec& F, const ProcessModel& m, const DirectOptions& opt) {
    require(opt.n >= 2, "grid needs n >= 2");
    require(opt.multistarts >= 1, "need at least one start");
    m.validate();
    std::vector<PathGrid> starts = default_starts(m.T, opt.n, opt.multistarts);
    for (const auto& s : opt.extra_starts) starts.push_back(s.n() == opt.n ? s : s.resampled(opt.n));

    std::vector<StartResult> results(starts.size());
    parallel_for(starts.size(), opt.workers, [&](std::size_t k) { results[k] = run_start(F, m, opt, starts[k]); });

    std::vector<std::size_t> order;
    for (std::size_t k = 0; k < results.size(); ++k)
        if (results[k].feasible) order.push_back(k);
    if (order.empty()) fail(Errc::AllStartsFailed, "every start has infinite action");
    // deterministic merge: best value first, ties broken lexicographically on the path
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (results[a].converged != results[b].converged) return results[a].converged;
        if (results[a].J != results[b].J) return results[a].J > results[b].J;
        return results[a].path.phi < results[b].path.phi;
    });
    const StartResult& best = results[order[0]];
    if (!best.converged)
        fail(Errc::NoConvergence, "no start reached the gradient tolerance (best |grad|/h = " +
                                      std::to_string(best.grad) + ")");

    ExtremalSolution sol;
    sol.phi0 = best.path;
    sol.z0 = best.z;
    sol.z0_path = tilt_path_from_midpoints(sol.phi0, sol.z0);
    sol.value_F = eval_functional(F, sol.phi0);
    sol.value_S = sol.value_F - best.J;
    sol.gap = best.J;
    auto& dg = sol.diag;
    dg.n_starts = static_cast<int>(starts.size());
    dg.grad_norm = best.grad;
    dg.iterations = best.iterations;
    dg.hessian_max_eig = best.max_eig;
    dg.z0_terminal = terminal_z(sol.z0);
    for (std::size_t k : order) {
        const auto& r = results[k];
        if (!r.converged) continue;
        ++dg.n_converged;
        const double dgap = std::abs(r.J - best.J);
        const double dist = sup_distance(r.path, best.path);
        dg.gap_spread = std::max(dg.gap_spread, dgap);
        dg.path_spread = std::max(dg.path_spread, dist);
        if (dgap < 1e-7 && dist > 1e-4) dg.non_unique_suspected = true;
    }
    return sol;
}

Refinement richardson(const std::vector<int>& grids, const std::vector<double>& gaps,
                      const std::vector<double>& z0_terminal) {
    require(gaps.size() == 3 && grids.size() == 3, "Richardson needs three grids");
    Refinement r;
    r.grids = grids;
    r.gaps = gaps;
    r.z0_terminal = z0_terminal;
    const double d1 = gaps[1] - gaps[0], d2 = gaps[2] - gaps[1];
    const double noise = 1e-12 * std::max(1.0, std::abs(gaps[2]));
    if (std::abs(d2) <= noise) {
        r.order = std::abs(d1) <= noise ? std::numeric_limits<double>::quiet_NaN()
                                        : std::numeric_limits<double>::infinity();
        r.gap_extrapolated = gaps[2];
        r.error_estimate = std::abs(d2);
    } else {
        r.order = std::log2(std::abs(d1 / d2));
        if (r.order < 1.0)
            fail(Errc::OrderAnomalous, "empirical refinement order " + std::to_string(r.order) + " is below 1");
        r.gap_extrapolated = gaps[2] + d2 / 3.0;
        r.error_estimate = std::abs(d2) / 3.0;
    }
    if (z0_terminal.size() == 3) r.z0_terminal_extrapolated = z0_terminal[2] + (z0_terminal[2] - z0_terminal[1]) / 3.0;
    return r;
}

ExtremalSolution refine_and_extrapolate(const std::function<ExtremalSolution(std::size_t)>& solve, std::size_t n) {
    std::vector<int> grids;
    std::vector<double> gaps, zt;
    ExtremalSolution last;
    for (std::size_t k : {n, 2 * n, 4 * n}) {
        last = solve(k);
        grids.push_back(static_cast<int>(k));
        gaps.push_back(last.gap);
        zt.push_back(last.diag.z0_terminal);
    }
    last.refinement = richardson(grids, gaps, zt);
    return last;
}

}  // namespace ldexpand
