#include "ldexpand/model.hpp"

#include <algorithm>

namespace ldexpand {

double fd_derivative(const std::function<double(double)>& f, double x, int n) {
    const double h = std::pow(std::numeric_limits<double>::epsilon(), 1.0 / (n + 2)) * std::max(1.0, std::abs(x));
    switch (n) {
        case 0: return f(x);
        case 1: return (f(x + h) - f(x - h)) / (2 * h);
        case 2: return (f(x + h) - 2 * f(x) + f(x - h)) / (h * h);
        case 3: return (f(x + 2 * h) - 2 * f(x + h) + 2 * f(x - h) - f(x - 2 * h)) / (2 * h * h * h);
        case 4: return (f(x + 2 * h) - 4 * f(x + h) + 6 * f(x) - 4 * f(x - h) + f(x - 2 * h)) / (h * h * h * h);
        default: fail(Errc::UnsupportedOrder, "finite differences support orders up to 4, got " + std::to_string(n));
    }
}

Coefficient Coefficient::constant(double c) {
    Coefficient k;
    k.value_ = c;
    return k;
}

Coefficient Coefficient::function(Fn2 f, std::vector<Fn2> dx, bool t_dependent, bool x_dependent, int smoothness) {
    require(static_cast<bool>(f), "coefficient function must be callable");
    Coefficient k;
    k.is_constant_ = false;
    k.f_ = std::move(f);
    k.dx_ = std::move(dx);
    k.t_dependent_ = t_dependent;
    k.x_dependent_ = x_dependent;
    k.smoothness_ = std::max<int>(smoothness, static_cast<int>(k.dx_.size()));
    return k;
}

Coefficient Coefficient::expression(const Expr& e) {
    if (e.is_constant()) return constant(e(0.0, 0.0));
    std::vector<Fn2> dx;
    Expr d = e;
    for (int n = 1; n <= 6; ++n) {
        d = d.derivative(Expr::Var::X);
        dx.push_back([d](double t, double x) { return d(t, x); });
    }
    return function([e](double t, double x) { return e(t, x); }, std::move(dx), e.depends_on(Expr::Var::T),
                    e.depends_on(Expr::Var::X), 6);
}

double Coefficient::dx(int n, double t, double x) const {
    if (n == 0) return (*this)(t, x);
    if (!x_dependent()) return 0.0;
    if (n <= static_cast<int>(dx_.size())) return dx_[n - 1](t, x);
    if (n > smoothness_)
        fail(Errc::UnsupportedOrder, "coefficient x-derivative of order " + std::to_string(n) +
                                         " exceeds supplied smoothness " + std::to_string(smoothness_));
    return fd_derivative([&](double y) { return f_(t, y); }, x, n);
}

JumpMeasure JumpMeasure::atoms(std::vector<Atom> atoms) {
    JumpMeasure m;
    m.atoms_ = std::move(atoms);
    return m;
}

JumpMeasure JumpMeasure::density(DensityFn rho, double support, int order, bool t_dependent, bool x_dependent) {
    require(static_cast<bool>(rho), "density must be callable");
    require(support > 0.0 && std::isfinite(support), "density support must be a positive finite bound");
    require(order >= 2, "quadrature order must be at least 2");
    JumpMeasure m;
    m.is_density_ = true;
    m.rho_ = std::move(rho);
    m.support_ = support;
    m.order_ = order;
    m.rho_t_dependent_ = t_dependent;
    m.rho_x_dependent_ = x_dependent;
    return m;
}

double JumpMeasure::support_bound() const {
    if (is_density_) return support_;
    double b = 0.0;
    for (const auto& a : atoms_) b = std::max(b, std::abs(a.size));
    return b;
}

bool JumpMeasure::x_dependent() const {
    if (is_density_) return rho_x_dependent_;
    return std::any_of(atoms_.begin(), atoms_.end(), [](const Atom& a) { return a.weight.x_dependent(); });
}

bool JumpMeasure::t_dependent() const {
    if (is_density_) return rho_t_dependent_;
    return std::any_of(atoms_.begin(), atoms_.end(), [](const Atom& a) { return a.weight.t_dependent(); });
}

bool ProcessModel::homogeneous() const {
    return !alpha.x_dependent() && !alpha.t_dependent() && !a.x_dependent() && !a.t_dependent() &&
           !nu.x_dependent() && !nu.t_dependent();
}

bool ProcessModel::x_dependent() const { return alpha.x_dependent() || a.x_dependent() || nu.x_dependent(); }

void ProcessModel::validate() const {
    require(T > 0.0 && std::isfinite(T), "time horizon T must be positive");
    require(std::isfinite(x0), "initial position must be finite");
    // spot-check sign constraints on a coarse lattice
    for (int i = 0; i <= 4; ++i) {
        const double t = T * i / 4.0;
        for (double x : {-2.0, -1.0, 0.0, 1.0, 2.0}) {
            const double xx = x0 + x;
            if (a(t, xx) < 0.0)
                fail(Errc::InvalidArgument, "diffusion coefficient a(t,x) is negative at t=" + std::to_string(t) +
                                                ", x=" + std::to_string(xx));
            nu.for_each_node(t, xx, 0, [&](double, double w) {
                if (w < 0.0)
                    fail(Errc::InvalidArgument, "jump measure weight is negative at t=" + std::to_string(t) +
                                                    ", x=" + std::to_string(xx));
            });
        }
    }
}

double g0_mixed(const ProcessModel& m, double t, double x, double z, int nz, int nx) {
    require(nz >= 0 && nx >= 0, "derivative orders must be non-negative");
    double s = 0.0;
    if (nz <= 1) {
        const double al = m.alpha.dx(nx, t, x);
        s += nz == 0 ? z * al : al;
    }
    if (nz <= 2) {
        const double av = m.a.dx(nx, t, x);
        s += nz == 0 ? 0.5 * av * z * z : (nz == 1 ? av * z : av);
    }
    m.nu.for_each_node(t, x, nx, [&](double u, double w) {
        if (w != 0.0) s += w * detail::jump_kernel(z, u, nz);
    });
    return s;
}

double cumulant_g0(const ProcessModel& m, double t, double x, double z) { return g0_mixed(m, t, x, z, 0, 0); }

double cumulant_geps(const ProcessModel& m, double t, double x, double z, double eps) {
    require(eps > 0.0, "eps must be positive");
    return cumulant_g0(m, t, x, eps * z) / eps;
}

void g0_dz_dzz(const ProcessModel& m, double t, double x, double z, double& dz, double& dzz) {
    const double av = m.a(t, x);
    dz = m.alpha(t, x) + av * z;
    dzz = av;
    m.nu.for_each_node(t, x, 0, [&](double u, double w) {
        if (w == 0.0) return;
        const double y = z * u;
        if (std::abs(y) > detail::kMaxExponent)
            fail(Errc::Overflow, "exponent z*u = " + std::to_string(y) + " exceeds the finite range");
        dz += w * u * std::expm1(y);
        dzz += w * u * u * std::exp(y);
    });
}

G0Partials g0_partials(const ProcessModel& m, double t, double x, double z, int x_order) {
    G0Partials p;
    g0_dz_dzz(m, t, x, z, p.dz, p.dzz);
    p.dzx = g0_mixed(m, t, x, z, 1, 1);
    p.dx.resize(std::max(0, x_order));
    for (int n = 1; n <= x_order; ++n) p.dx[n - 1] = g0_mixed(m, t, x, z, 0, n);
    return p;
}

double tilted_jump_mass(const ProcessModel& m, double t, double x, double z) {
    double s = 0.0;
    m.nu.for_each_node(t, x, 0, [&](double u, double w) {
        if (w != 0.0) s += w * std::exp(z * u);
    });
    return s;
}

double tilted_jump_mean(const ProcessModel& m, double t, double x, double z) {
    double s = 0.0;
    m.nu.for_each_node(t, x, 0, [&](double u, double w) {
        if (w != 0.0) s += w * u * std::exp(z * u);
    });
    return s;
}

TiltedMoments tilted_moments(const ProcessModel& m, double t, double x, double z0, int j) {
    require(j >= 1, "moment order must be at least 1");
    TiltedMoments r;
    r.j = j;
    if (j == 1) {
        double dz = 0.0, dzz = 0.0;
        g0_dz_dzz(m, t, x, z0, dz, dzz);
        r.alpha = dz;
        r.beta = std::abs(dz);
        return r;
    }
    double a = 0.0, b = 0.0;
    m.nu.for_each_node(t, x, 0, [&](double u, double w) {
        if (w == 0.0) return;
        const double e = std::exp(z0 * u);
        a += w * std::pow(u, j) * e;
        b += w * std::pow(std::abs(u), j) * e;
    });
    if (j == 2) {
        const double av = m.a(t, x);
        a += av;
        b += av;
    }
    r.alpha = a;
    r.beta = b;
    return r;
}

AssumptionReport check_assumptions(const ProcessModel& m, const SampleBox& box, int n_samples) {
    require(n_samples >= 3, "need at least 3 samples per axis");
    AssumptionReport rep;
    auto lerp = [](double lo, double hi, int i, int n) { return n == 1 ? lo : lo + (hi - lo) * i / (n - 1); };
    std::vector<double> zs(n_samples), gz(n_samples);
    for (int k = 0; k < n_samples; ++k) zs[k] = lerp(box.z_min, box.z_max, k, n_samples);
    for (int i = 0; i < n_samples; ++i) {
        const double t = lerp(box.t_min, box.t_max, i, n_samples);
        for (int j = 0; j < n_samples; ++j) {
            const double x = lerp(box.x_min, box.x_max, j, n_samples);
            rep.max_abs_a = std::max(rep.max_abs_a, std::abs(m.a(t, x)));
            for (int k = 0; k < n_samples; ++k) {
                const double z = zs[k];
                double dz = 0.0, dzz = 0.0;
                g0_dz_dzz(m, t, x, z, dz, dzz);
                rep.min_dzz = std::min(rep.min_dzz, dzz);
                rep.max_abs_dzx = std::max(rep.max_abs_dzx, std::abs(g0_mixed(m, t, x, z, 1, 1)));
                gz[k] = cumulant_g0(m, t, x, z);
                ++rep.samples;
                if (dzz < 0.0) ++rep.convexity_violations;
            }
            for (int k = 1; k + 1 < n_samples; ++k) {
                const double lam = (zs[k + 1] - zs[k]) / (zs[k + 1] - zs[k - 1]);
                const double chord = lam * gz[k - 1] + (1.0 - lam) * gz[k + 1];
                const double slack = 1e-12 * std::max(1.0, std::abs(chord));
                if (gz[k] > chord + slack) ++rep.convexity_violations;
            }
        }
    }
    return rep;
}

}  // namespace ldexpand
