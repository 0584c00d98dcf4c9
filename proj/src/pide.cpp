#include "ldexpand/pide.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include <Eigen/Dense>
#include <boost/math/distributions/students_t.hpp>

#include "ldexpand/expansion.hpp"
#include "ldexpand/kernels.hpp"
#include "ldexpand/parallel.hpp"
#include "ldexpand/simulate.hpp"

namespace ldexpand {

void Grid1D::validate() const {
    require(x_min < x_max, "grid needs x_min < x_max");
    require(nx >= 16, "grid needs at least 16 points");
    require(eps > 0.0, "eps must be positive");
    require(t_end >= 0.0, "t_end must be non-negative");
}

double required_margin(const ProcessModel& m, double eps, double t_end) {
    double amax = 0.0, rate = 0.0;
    for (int k = 0; k <= 20; ++k) {
        const double x = -1.0 + 0.1 * k;
        amax = std::max(amax, std::abs(m.a(0.0, x)));
        double mass = 0.0;
        m.nu.for_each_node(0.0, x, 0, [&](double, double w) { mass += w; });
        rate = std::max(rate, mass);
    }
    const double U = m.nu.empty() ? 0.0 : m.nu.support_bound();
    return 6.0 * std::sqrt(eps * amax * t_end) + eps * U * rate * t_end;
}

InitialDatum initial_datum(const std::string& spec) {
    if (spec == "one") return [](double) { return 1.0; };
    if (spec == "bump") return [](double x) { return std::exp(-0.5 * x * x); };
    const Expr e = Expr::parse(spec);
    if (e.depends_on(Expr::Var::T) || e.depends_on(Expr::Var::U))
        fail(Errc::ConfigError, "initial datum may only depend on x: '" + spec + "'");
    return [e](double x) { return e(0.0, x); };
}

namespace {

double cubic_at(const std::vector<double>& xs, const std::vector<double>& u, double xq) {
    const std::size_t n = xs.size();
    const double dx = xs[1] - xs[0];
    const double s = (xq - xs[0]) / dx;
    long k = static_cast<long>(std::floor(s)) - 1;
    k = std::clamp<long>(k, 0, static_cast<long>(n) - 4);
    const double th = s - static_cast<double>(k + 1);
    const double c0 = -th * (th - 1) * (th - 2) / 6, c1 = (th + 1) * (th - 1) * (th - 2) / 2;
    const double c2 = -(th + 1) * th * (th - 2) / 2, c3 = (th + 1) * th * (th - 1) / 6;
    const std::size_t i = static_cast<std::size_t>(k);
    return c0 * u[i] + c1 * u[i + 1] + c2 * u[i + 2] + c3 * u[i + 3];
}

// explicit nonlocal term with cubic Lagrange interpolation at fixed shifts
class Nonlocal {
public:
    Nonlocal(const ProcessModel& m, const Grid1D& g) : m_(m), g_(g), nx_(g.nx), eps_(g.eps) {
        if (m.nu.empty()) return;
        const double dx = g.dx();
        m.nu.for_each_node(0.0, g.x(0), 0, [&](double y, double) { y_.push_back(y); });
        int kmax = 0;
        for (double y : y_) {
            const double s = eps_ * y / dx;
            const int k = static_cast<int>(std::floor(s));
            const double th = s - k;
            k_.push_back(k);
            coef_.push_back({-th * (th - 1) * (th - 2) / 6, (th + 1) * (th - 1) * (th - 2) / 2,
                             -(th + 1) * th * (th - 2) / 2, (th + 1) * th * (th - 1) / 6});
            kmax = std::max(kmax, std::abs(k));
        }
        pad_ = kmax + 3;
        w_.assign(y_.size(), std::vector<double>(nx_));
        mass_.assign(nx_, 0.0);
        mean_.assign(nx_, 0.0);
        ext_.assign(nx_ + 2 * static_cast<std::size_t>(pad_), 0.0);
        varies_ = m.nu.t_dependent();
        build(0.0);
    }

    bool empty() const { return y_.empty(); }
    double max_mass() const { return mass_.empty() ? 0.0 : *std::max_element(mass_.begin(), mass_.end()) / eps_; }

    void build(double t) {
        std::fill(mass_.begin(), mass_.end(), 0.0);
        std::fill(mean_.begin(), mean_.end(), 0.0);
        for (std::size_t i = 0; i < nx_; ++i) {
            std::size_t q = 0;
            m_.nu.for_each_node(t, g_.x(i), 0, [&](double y, double w) {
                w_[q][i] = w / eps_;
                mass_[i] += w;
                mean_[i] += w * y;
                ++q;
            });
        }
    }

    // out += eps^-1 int [u(x+eps y) - u(x) - eps y u_x] nu(dy)
    void apply(const std::vector<double>& u, double t, std::vector<double>& out) {
        if (empty()) return;
        if (varies_) build(t);
        const std::size_t P = static_cast<std::size_t>(pad_);
        std::copy(u.begin(), u.end(), ext_.begin() + pad_);
        const double dl = u[1] - u[0], dr = u[nx_ - 1] - u[nx_ - 2];
        for (std::size_t j = 1; j <= P; ++j) {
            ext_[P - j] = u[0] - static_cast<double>(j) * dl;
            ext_[P + nx_ - 1 + j] = u[nx_ - 1] + static_cast<double>(j) * dr;
        }
        const auto& K = kernels::active();
        for (std::size_t q = 0; q < y_.size(); ++q) {
            const auto& c = coef_[q];
            K.accumulate_shifted_cubic(out.data(), ext_.data() + pad_ + k_[q] - 1, w_[q].data(), c[0], c[1], c[2],
                                       c[3], nx_);
        }
        const double inv2dx = 0.5 / g_.dx();
        for (std::size_t i = 0; i < nx_; ++i) {
            const double ux = (ext_[P + i + 1] - ext_[P + i - 1]) * inv2dx;
            out[i] -= (mass_[i] * u[i] + eps_ * mean_[i] * ux) / eps_;
        }
    }

private:
    const ProcessModel& m_;
    const Grid1D& g_;
    std::size_t nx_;
    double eps_;
    std::vector<double> y_;
    std::vector<int> k_;
    std::vector<std::array<double, 4>> coef_;
    std::vector<std::vector<double>> w_;
    std::vector<double> mass_, mean_, ext_;
    int pad_ = 0;
    bool varies_ = false;
};

struct LocalCoeffs {
    std::vector<double> lower, upper;  // L u_i = lower (u_{i-1} - u_i) + upper (u_{i+1} - u_i)
};

void local_coeffs(const ProcessModel& m, const Grid1D& g, double t, LocalCoeffs& lc) {
    const double dx = g.dx();
    lc.lower.assign(g.nx, 0.0);
    lc.upper.assign(g.nx, 0.0);
    for (std::size_t i = 1; i + 1 < g.nx; ++i) {
        const double x = g.x(i);
        const double a = m.a(t, x);
        if (a < 0.0) fail(Errc::NegativeDiffusion, "a(t,x) < 0 at x=" + std::to_string(x));
        const double D = 0.5 * g.eps * a / (dx * dx);
        const double b = m.alpha(t, x);
        lc.lower[i] = D + std::max(-b, 0.0) / dx;
        lc.upper[i] = D + std::max(b, 0.0) / dx;
    }
}

// (I - dt L) v = r on interior nodes with v_0 = 2 v_1 - v_2 and the mirror condition at the right end
void implicit_solve(const LocalCoeffs& lc, double dt, std::vector<double>& v) {
    const std::size_t nx = v.size(), m = nx - 2;
    std::vector<double> a(m), b(m), c(m), d(m);
    for (std::size_t j = 0; j < m; ++j) {
        const std::size_t i = j + 1;
        a[j] = -dt * lc.lower[i];
        c[j] = -dt * lc.upper[i];
        b[j] = 1.0 - a[j] - c[j];
        d[j] = v[i];
    }
    b[0] += 2.0 * a[0];
    c[0] -= a[0];
    a[0] = 0.0;
    b[m - 1] += 2.0 * c[m - 1];
    a[m - 1] -= c[m - 1];
    c[m - 1] = 0.0;
    for (std::size_t j = 1; j < m; ++j) {
        const double w = a[j] / b[j - 1];
        b[j] -= w * c[j - 1];
        d[j] -= w * d[j - 1];
    }
    d[m - 1] /= b[m - 1];
    for (std::size_t j = m - 1; j-- > 0;) d[j] = (d[j] - c[j] * d[j + 1]) / b[j];
    for (std::size_t j = 0; j < m; ++j) v[j + 1] = d[j];
    v[0] = 2.0 * v[1] - v[2];
    v[nx - 1] = 2.0 * v[nx - 2] - v[nx - 3];
}

}  // namespace

double PideSolution::value(std::size_t k, double xq) const {
    require(k < u.size(), "snapshot index out of range");
    return cubic_at(x, u[k], xq);
}

std::size_t PideSolution::snapshot(double t) const {
    for (std::size_t k = 0; k < times.size(); ++k)
        if (std::abs(times[k] - t) <= 1e-9 * std::max(1.0, std::abs(t))) return k;
    fail(Errc::InvalidArgument, "no snapshot at t=" + std::to_string(t));
}

PideSolution solve_fd(const ProcessModel& m, const Coefficient& c, const InitialDatum& g, const Grid1D& grid,
                      const FdOptions& opt) {
    grid.validate();
    const std::size_t nx = grid.nx;
    const double eps = grid.eps, T = grid.t_end;
    PideSolution sol;
    sol.grid = grid;
    sol.x.resize(nx);
    for (std::size_t i = 0; i < nx; ++i) sol.x[i] = grid.x(i);

    std::vector<double> u(nx);
    for (std::size_t i = 0; i < nx; ++i) u[i] = g(sol.x[i]);
    sol.times.push_back(0.0);
    sol.u.push_back(u);
    if (T == 0.0) return sol;

    Nonlocal nl(m, grid);
    double cmax = 0.0;
    for (double x : sol.x) cmax = std::max(cmax, std::abs(c(0.0, x)));
    const double dt_max = 0.25 * eps / (nl.max_mass() * eps + cmax);
    std::size_t nt = grid.nt;
    if (nt == 0) nt = static_cast<std::size_t>(std::ceil(T / opt.dt_target - 1e-9));
    if (std::isfinite(dt_max)) nt = std::max(nt, static_cast<std::size_t>(std::ceil(T / dt_max - 1e-9)));
    if (nt > opt.nt_ceiling)
        fail(Errc::StabilityViolation, "stability bound needs " + std::to_string(nt) + " steps, ceiling is " +
                                           std::to_string(opt.nt_ceiling));
    sol.nt = nt;
    sol.grid.nt = nt;
    const double dt = T / static_cast<double>(nt);
    sol.dt = dt;

    std::vector<double> snaps;
    for (double s : opt.snapshots)
        if (s > 0.0 && s < T) snaps.push_back(s);
    snaps.push_back(T);
    std::sort(snaps.begin(), snaps.end());
    snaps.erase(std::unique(snaps.begin(), snaps.end()), snaps.end());
    std::size_t next = 0;

    const bool local_t = m.a.t_dependent() || m.alpha.t_dependent();
    LocalCoeffs lc;
    local_coeffs(m, grid, dt, lc);
    std::vector<double> react(nx);
    auto fill_react = [&](double t) {
        for (std::size_t i = 0; i < nx; ++i) react[i] = std::exp(dt * c(t, sol.x[i]) / eps);
    };
    fill_react(dt);

    std::vector<double> rhs(nx), prev(nx);
    for (std::size_t n = 0; n < nt; ++n) {
        const double t0 = dt * static_cast<double>(n), t1 = dt * static_cast<double>(n + 1);
        prev = u;
        std::fill(rhs.begin(), rhs.end(), 0.0);
        nl.apply(u, t0, rhs);
        for (std::size_t i = 0; i < nx; ++i) rhs[i] = u[i] + dt * rhs[i];
        if (local_t && n > 0) local_coeffs(m, grid, t1, lc);
        implicit_solve(lc, dt, rhs);
        if (c.t_dependent() && n > 0) fill_react(t1);
        if (!c.is_zero())
            for (std::size_t i = 0; i < nx; ++i) rhs[i] *= react[i];
        u.swap(rhs);
        while (next < snaps.size() && snaps[next] <= t1 + 1e-12 * T) {
            const double s = snaps[next];
            if (std::abs(s - t1) <= 1e-9 * T) {
                sol.u.push_back(u);
            } else {
                const double lam = (s - t0) / dt;
                std::vector<double> v(nx);
                for (std::size_t i = 0; i < nx; ++i) v[i] = (1.0 - lam) * prev[i] + lam * u[i];
                sol.u.push_back(std::move(v));
            }
            sol.times.push_back(s);
            ++next;
        }
    }
    for (double v : u)
        if (!std::isfinite(v)) fail(Errc::StabilityViolation, "non-finite value in the FD solution");

    if (opt.check_leak) {
        // spatial operator over the outer bands, against the interior maximum
        std::vector<double> op(nx, 0.0);
        nl.apply(u, T, op);
        if (local_t) local_coeffs(m, grid, T, lc);
        for (std::size_t i = 1; i + 1 < nx; ++i)
            op[i] += lc.lower[i] * (u[i - 1] - u[i]) + lc.upper[i] * (u[i + 1] - u[i]);
        double umax = 0.0, band = 0.0;
        for (double v : u) umax = std::max(umax, std::abs(v));
        for (std::size_t j = 1; j <= 5 && j + 1 < nx; ++j) {
            band = std::max(band, std::abs(op[j]));
            band = std::max(band, std::abs(op[nx - 1 - j]));
        }
        sol.leak_ratio = umax > 0.0 ? band * T / umax : 0.0;
        if (sol.leak_ratio > 1e-6)
            fail(Errc::BoundaryLeak, "boundary band carries " + std::to_string(sol.leak_ratio) +
                                         " of the interior maximum; enlarge the domain");
    }
    return sol;
}

std::vector<McEstimate> feynman_kac_mc(const ProcessModel& m, const InitialDatum& g, const Coefficient& c,
                                       double eps, const std::vector<double>& times, double x,
                                       const FkOptions& opt) {
    require(!times.empty() && opt.n >= 2, "need probe times and samples");
    std::vector<double> tq = times;
    std::sort(tq.begin(), tq.end());
    require(tq.front() >= 0.0, "probe times must be non-negative");
    const double tmax = tq.back();
    const std::size_t nt = tq.size(), n = opt.n;
    std::vector<double> vals(n * nt);
    if (tmax == 0.0) {
        std::fill(vals.begin(), vals.end(), g(x));
    } else {
        SimConfig cfg;
        cfg.eps = eps;
        cfg.dt = std::min(opt.dt, tmax);
        cfg.seed = opt.seed;
        cfg.t_end = tmax;
        cfg.x0 = x;
        const TiltedSimulator sim(m, TiltPath(0.0), cfg);
        constexpr std::size_t B = 256;
        parallel_for((n + B - 1) / B, opt.workers, [&](std::size_t b) {
            SamplePath xi;
            std::vector<long double> I(nt);
            for (std::size_t p = b * B; p < std::min(n, (b + 1) * B); ++p) {
                sim.run(p, xi);
                if (c.is_constant()) {
                    for (std::size_t j = 0; j < nt; ++j) I[j] = static_cast<long double>(c.constant_value()) * tq[j];
                } else {
                    // left-point rule on the skeleton
                    long double acc = 0.0L;
                    std::size_t j = 0;
                    for (std::size_t k = 0; k + 1 < xi.times.size() && j < nt; ++k) {
                        const double ck = c(xi.times[k], xi.values[k]);
                        while (j < nt && tq[j] <= xi.times[k + 1]) {
                            I[j] = acc + static_cast<long double>(ck) * (tq[j] - xi.times[k]);
                            ++j;
                        }
                        acc += static_cast<long double>(ck) * (xi.times[k + 1] - xi.times[k]);
                    }
                    for (; j < nt; ++j) I[j] = acc;
                }
                for (std::size_t j = 0; j < nt; ++j)
                    vals[p * nt + j] = g(value_at(xi, tq[j])) * static_cast<double>(std::exp(I[j] / eps));
            }
        });
    }
    std::vector<McEstimate> out(nt);
    for (std::size_t j = 0; j < nt; ++j) {
        long double s = 0.0L;
        for (std::size_t p = 0; p < n; ++p) s += vals[p * nt + j];
        const long double mean = s / static_cast<long double>(n);
        long double ss = 0.0L;
        for (std::size_t p = 0; p < n; ++p) ss += (vals[p * nt + j] - mean) * (vals[p * nt + j] - mean);
        out[j].t = tq[j];
        out[j].mean = static_cast<double>(mean);
        out[j].se = static_cast<double>(std::sqrt(ss / static_cast<long double>(n - 1) / static_cast<long double>(n)));
    }
    return out;
}

McEstimate feynman_kac_mc(const ProcessModel& m, const InitialDatum& g, const Coefficient& c, double eps, double t,
                          double x, const FkOptions& opt) {
    return feynman_kac_mc(m, g, c, eps, std::vector<double>{t}, x, opt).front();
}

std::vector<Probe> default_probes() {
    std::vector<Probe> p;
    for (double t : {0.25, 0.5, 1.0})
        for (double x : {-1.0, 0.0, 1.0}) p.push_back({t, x});
    return p;
}

CompareReport specific_case_check(const ProcessModel& m, const Coefficient& c, const InitialDatum& g,
                                  const Grid1D& grid, const SpecificCaseOptions& opt) {
    require(!opt.probes.empty(), "need probes");
    const double eps = grid.eps;
    Grid1D gr = grid;
    for (const auto& p : opt.probes) gr.t_end = std::max(gr.t_end, p.t);
    FdOptions fo = opt.fd;
    for (const auto& p : opt.probes) fo.snapshots.push_back(p.t);
    const PideSolution full = solve_fd(m, c, g, gr, fo);
    Grid1D g0 = gr;
    g0.nt = full.nt;
    const PideSolution plain = solve_fd(m, Coefficient(), g, g0, fo);

    // one MC run per distinct x, reading every probe time off the same paths
    std::map<double, std::vector<double>> by_x;
    for (const auto& p : opt.probes) by_x[p.x].push_back(p.t);
    std::map<std::pair<double, double>, McEstimate> mc;
    std::size_t xi = 0;
    for (auto& [x, ts] : by_x) {
        FkOptions fk = opt.mc;
        fk.seed = derive_seed(opt.mc.seed, xi++);
        std::sort(ts.begin(), ts.end());
        ts.erase(std::unique(ts.begin(), ts.end()), ts.end());
        for (const auto& e : feynman_kac_mc(m, g, c, eps, ts, x, fk)) mc[{e.t, x}] = e;
    }

    double gmax = 0.0;
    for (double x : full.x) gmax = std::max(gmax, std::abs(g(x)));
    CompareReport rep;
    rep.eps = eps;
    rep.scaled_bounded = true;
    for (const auto& p : opt.probes) {
        CompareRow r;
        r.t = p.t;
        r.x = p.x;
        r.u_fd = full.value(full.snapshot(p.t), p.x);
        r.u_factorized = std::exp(p.t / eps) * plain.value(plain.snapshot(p.t), p.x);
        const auto& e = mc.at({p.t, p.x});
        r.u_mc = e.mean;
        r.u_mc_se = e.se;
        r.scaled = std::exp(-p.t / eps) * r.u_fd;
        r.rel_fd_mc = std::abs(r.u_fd - r.u_mc) / std::max(std::abs(r.u_mc), 1e-300);
        r.rel_factorization = std::abs(r.u_fd - r.u_factorized) / std::max(std::abs(r.u_fd), 1e-300);
        rep.max_rel_fd_mc = std::max(rep.max_rel_fd_mc, r.rel_fd_mc);
        rep.max_rel_factorization = std::max(rep.max_rel_factorization, r.rel_factorization);
        if (r.scaled > gmax * (1.0 + 1e-9) + 1e-12) rep.scaled_bounded = false;
        rep.rows.push_back(r);
    }
    if (opt.g_is_one) {
        rep.max_rel_one = 0.0;
        for (std::size_t k = 0; k < full.times.size(); ++k) {
            const double f = std::exp(-full.times[k] / eps);
            for (double v : full.u[k]) rep.max_rel_one = std::max(rep.max_rel_one, std::abs(v * f - 1.0));
        }
    }
    rep.solution = full;
    return rep;
}

AsymptoticReport asymptotic_compare(const ProcessModel& m, const Coefficient& c, const InitialDatum& g,
                                    const Grid1D& grid, const std::vector<double>& eps_list,
                                    const std::vector<Probe>& probes, const FdOptions& opt) {
    if (eps_list.size() < 3) fail(Errc::FitIllConditioned, "the fit needs at least three eps values");
    require(!probes.empty(), "need probes");
    const std::size_t ne = eps_list.size();
    Eigen::MatrixXd X(ne, 2);
    Eigen::MatrixXd Y(ne, probes.size());
    FdOptions fo = opt;
    Grid1D gr = grid;
    for (const auto& p : probes) {
        fo.snapshots.push_back(p.t);
        gr.t_end = std::max(gr.t_end, p.t);
    }
    for (std::size_t e = 0; e < ne; ++e) {
        gr.eps = eps_list[e];
        gr.nt = grid.nt;
        const PideSolution s = solve_fd(m, c, g, gr, fo);
        X(e, 0) = 1.0;
        X(e, 1) = std::sqrt(eps_list[e]);
        for (std::size_t j = 0; j < probes.size(); ++j)
            Y(e, j) = std::exp(-probes[j].t / eps_list[e]) * s.value(s.snapshot(probes[j].t), probes[j].x);
    }
    AsymptoticReport rep;
    rep.eps = eps_list;
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(X, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const auto sv = svd.singularValues();
    rep.condition = sv[1] > 0.0 ? sv[0] / sv[1] : std::numeric_limits<double>::infinity();
    if (!(rep.condition <= 1e8)) fail(Errc::FitIllConditioned, "eps values too close for a two-term fit");
    const Eigen::Matrix2d XtXi = (X.transpose() * X).inverse();
    const double dof = static_cast<double>(ne - 2);
    const double tq = dof > 0 ? boost::math::quantile(boost::math::students_t(dof), 0.975)
                              : std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < probes.size(); ++j) {
        const Eigen::VectorXd y = Y.col(static_cast<Eigen::Index>(j));
        const Eigen::VectorXd beta = svd.solve(y);
        const double rss = (y - X * beta).squaredNorm();
        const double s2 = dof > 0 ? rss / dof : 0.0;
        const double se0 = std::sqrt(s2 * XtXi(0, 0)), se1 = std::sqrt(s2 * XtXi(1, 1));
        ProbeFit f;
        f.t = probes[j].t;
        f.x = probes[j].x;
        f.k0 = beta[0];
        f.k1 = beta[1];
        f.k0_lo = f.k0 - tq * se0;
        f.k0_hi = f.k0 + tq * se0;
        f.k1_lo = f.k1 - tq * se1;
        f.k1_hi = f.k1 + tq * se1;
        // deterministic flow x' = b(t, x), RK4
        double x = probes[j].x, t = 0.0;
        const int steps = 2000;
        const double h = probes[j].t / steps;
        for (int k = 0; k < steps; ++k, t += h) {
            const double k1 = m.alpha(t, x), k2 = m.alpha(t + h / 2, x + h / 2 * k1);
            const double k3 = m.alpha(t + h / 2, x + h / 2 * k2), k4 = m.alpha(t + h, x + h * k3);
            x += h / 6 * (k1 + 2 * k2 + 2 * k3 + k4);
        }
        f.flow_limit = g(x);
        rep.fits.push_back(f);
    }
    return rep;
}

}  // namespace ldexpand
