#include "ldexpand/functionals.hpp"

#include <algorithm>
#include <cmath>
#include <charconv>

namespace ldexpand {

namespace {

// 3-point Gauss-Legendre on [0, 1]
constexpr double kGs[3] = {0.1127016653792583, 0.5, 0.8872983346207417};
constexpr double kGw[3] = {5.0 / 18.0, 8.0 / 18.0, 5.0 / 18.0};

constexpr double kFact[6] = {1, 1, 2, 6, 24, 120};

double ipow(double x, int n) {
    double r = 1.0;
    for (int i = 0; i < n; ++i) r *= x;
    return r;
}

GenericTerm::PathFn as_fn(const PathGrid& p) {
    return [&p](double t) { return p(t); };
}

GenericTerm::PathFn as_fn(const SamplePath& p) {
    return [&p](double t) {
        const auto& ts = p.times;
        if (t <= ts.front()) return p.values.front();
        if (t >= ts.back()) return p.values.back();
        const std::size_t k = static_cast<std::size_t>(std::upper_bound(ts.begin(), ts.end(), t) - ts.begin()) - 1;
        const double w = (t - ts[k]) / (ts[k + 1] - ts[k]);
        return p.values[k] + w * (p.left_limit(k + 1) - p.values[k]);
    };
}

void check_order(int order, int max_order) {
    if (order > max_order)
        fail(Errc::UnsupportedOrder, "functional derivative of order " + std::to_string(order) +
                                         " exceeds supplied order " + std::to_string(max_order));
}

double parse_param(std::string_view s, std::string_view spec) {
    double v = 0.0;
    const auto r = std::from_chars(s.data(), s.data() + s.size(), v);
    if (r.ec != std::errc() || r.ptr != s.data() + s.size())
        fail(Errc::ConfigError, "bad numeric parameter in functional '" + std::string(spec) + "'");
    return v;
}

}  // namespace

int FunctionalSpec::max_order() const {
    int m = 1 << 20;
    for (const auto& g : integrals) m = std::min(m, g.max_order);
    for (const auto& h : terminals) m = std::min(m, h.max_order);
    for (const auto& g : generics) m = std::min(m, g.pairing ? g.max_order : 0);
    return m;
}

FunctionalSpec FunctionalSpec::constant_value(double c) {
    FunctionalSpec f;
    f.constant = c;
    return f;
}

FunctionalSpec FunctionalSpec::integral(std::function<double(double, double, int)> g, int max_order) {
    FunctionalSpec f;
    f.integrals.push_back({std::move(g), max_order});
    return f;
}

FunctionalSpec FunctionalSpec::terminal(std::function<double(double, int)> h, int max_order) {
    FunctionalSpec f;
    f.terminals.push_back({std::move(h), max_order});
    return f;
}

FunctionalSpec FunctionalSpec::integral_expr(const Expr& e) {
    std::vector<Expr> d{e};
    for (int n = 1; n <= 4; ++n) d.push_back(d.back().derivative(Expr::Var::X));
    return integral([d](double t, double y, int n) { return d[n](t, y); }, 4);
}

FunctionalSpec FunctionalSpec::terminal_expr(const Expr& e) {
    std::vector<Expr> d{e};
    for (int n = 1; n <= 4; ++n) d.push_back(d.back().derivative(Expr::Var::X));
    return terminal([d](double y, int n) { return d[n](0.0, y); }, 4);
}

FunctionalSpec& FunctionalSpec::operator+=(const FunctionalSpec& o) {
    constant += o.constant;
    integrals.insert(integrals.end(), o.integrals.begin(), o.integrals.end());
    terminals.insert(terminals.end(), o.terminals.begin(), o.terminals.end());
    generics.insert(generics.end(), o.generics.begin(), o.generics.end());
    return *this;
}

FunctionalSpec functional_preset(std::string_view spec) {
    const auto colon = spec.find(':');
    const std::string_view name = spec.substr(0, colon);
    const bool has_param = colon != std::string_view::npos;
    auto param = [&] {
        if (!has_param) fail(Errc::ConfigError, "functional '" + std::string(name) + "' needs a parameter");
        return parse_param(spec.substr(colon + 1), spec);
    };
    auto no_param = [&] {
        if (has_param) fail(Errc::ConfigError, "functional '" + std::string(name) + "' takes no parameter");
    };
    FunctionalSpec f;
    if (name == "example1-F") {
        no_param();
        f = FunctionalSpec::integral([](double, double y, int n) {
            switch (n) {
                case 0: return y - y * y;
                case 1: return 1.0 - 2.0 * y;
                case 2: return -2.0;
                default: return 0.0;
            }
        });
    } else if (name == "terminal-linear") {
        const double lam = param();
        f = FunctionalSpec::terminal([lam](double y, int n) { return n == 0 ? lam * y : (n == 1 ? lam : 0.0); });
    } else if (name == "quadratic-penalty") {
        const double k = param();
        f = FunctionalSpec::integral([k](double, double y, int n) {
            switch (n) {
                case 0: return -0.5 * k * y * y;
                case 1: return -k * y;
                case 2: return -k;
                default: return 0.0;
            }
        });
    } else if (name == "zero") {
        no_param();
    } else if (name == "one" || name == "H-one") {
        no_param();
        f.constant = 1.0;
    } else {
        fail(Errc::ConfigError, "unknown functional preset '" + std::string(spec) + "'");
    }
    f.name = std::string(spec);
    return f;
}

double eval_functional(const FunctionalSpec& F, const PathGrid& p) {
    double s = F.constant;
    const std::size_t n = p.n();
    const double h = p.h();
    for (const auto& term : F.integrals) {
        double acc = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double t0 = p.t(i), y0 = p.phi[i], dy = p.phi[i + 1] - p.phi[i];
            for (int q = 0; q < 3; ++q) acc += kGw[q] * term.g(t0 + kGs[q] * h, y0 + kGs[q] * dy, 0);
        }
        s += h * acc;
    }
    for (const auto& term : F.terminals) s += term.h(p.terminal(), 0);
    for (const auto& term : F.generics) s += term.eval(as_fn(p), p.T);
    return s;
}

double eval_functional(const FunctionalSpec& F, const SamplePath& p) {
    double s = F.constant;
    for (const auto& term : F.integrals) {
        double acc = 0.0;
        double f0 = term.g(p.times[0], p.values[0], 0);
        for (std::size_t k = 0; k + 1 < p.times.size(); ++k) {
            const double f1 = term.g(p.times[k + 1], p.left_limit(k + 1), 0);
            acc += 0.5 * (f0 + f1) * (p.times[k + 1] - p.times[k]);
            f0 = p.jump[k + 1] != 0.0 ? term.g(p.times[k + 1], p.values[k + 1], 0) : f1;
        }
        s += acc;
    }
    for (const auto& term : F.terminals) s += term.h(p.terminal(), 0);
    for (const auto& term : F.generics) s += term.eval(as_fn(p), p.times.back());
    return s;
}

double derivative_pairing(const FunctionalSpec& F, const PathGrid& base, int order,
                          const std::vector<PathGrid>& dirs) {
    require(order >= 0, "derivative order must be non-negative");
    require(static_cast<int>(dirs.size()) == order, "need one direction per derivative order");
    if (order == 0) return eval_functional(F, base);
    for (const auto& d : dirs) require(d.n() == base.n(), "directions must share the base grid");
    const std::size_t n = base.n();
    const double h = base.h();
    double s = 0.0;
    for (const auto& term : F.integrals) {
        check_order(order, term.max_order);
        double acc = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            for (int q = 0; q < 3; ++q) {
                const double w = kGs[q];
                double prod = 1.0;
                for (const auto& d : dirs) prod *= d.phi[i] + w * (d.phi[i + 1] - d.phi[i]);
                acc += kGw[q] * term.g(base.t(i) + w * h, base.phi[i] + w * (base.phi[i + 1] - base.phi[i]), order) *
                       prod;
            }
        }
        s += h * acc;
    }
    for (const auto& term : F.terminals) {
        check_order(order, term.max_order);
        double prod = 1.0;
        for (const auto& d : dirs) prod *= d.terminal();
        s += term.h(base.terminal(), order) * prod;
    }
    for (const auto& term : F.generics) {
        if (!term.pairing) fail(Errc::GenericMeasureUnsupported, "generic term supplies no derivative pairing");
        check_order(order, term.max_order);
        std::vector<GenericTerm::PathFn> fns;
        for (const auto& d : dirs) fns.push_back(as_fn(d));
        s += term.pairing(as_fn(base), order, fns, base.T);
    }
    return s;
}

double q_functional(int n, const PathGrid& x, const FunctionalSpec& F, const ProcessModel& m,
                    const PathGrid& phi0, const TiltPath& z0) {
    require(n >= 2, "Q(n, .) needs n >= 2");
    const PathGrid base = phi0.n() == x.n() ? phi0 : phi0.resampled(x.n());
    const double pair = derivative_pairing(F, base, n, std::vector<PathGrid>(n, x));
    const std::size_t N = x.n();
    const double h = x.h();
    double acc = 0.0;
    if (m.x_dependent()) {
        for (std::size_t i = 0; i < N; ++i) {
            for (int q = 0; q < 3; ++q) {
                const double t = x.t(i) + kGs[q] * h;
                const double xv = x.phi[i] + kGs[q] * (x.phi[i + 1] - x.phi[i]);
                acc += kGw[q] * ipow(xv, n) * g0_mixed(m, t, phi0(t), z0(t), 0, n);
            }
        }
    }
    return (pair + h * acc) / kFact[n];
}

double QCoefficients::coef(int n, double tt) const {
    const auto& cn = c[n];
    const std::size_t N = cn.size() - 1;
    const double s = std::clamp(tt / T, 0.0, 1.0) * static_cast<double>(N);
    const std::size_t i = std::min(static_cast<std::size_t>(s), N - 1);
    const double w = s - static_cast<double>(i);
    return cn[i] + w * (cn[i + 1] - cn[i]);
}

double QCoefficients::eval(int n, const SamplePath& x) const {
    require(n >= 2 && n <= max_order, "Q order outside the tabulated range");
    return eval_all(x)[n];
}

std::array<double, 5> QCoefficients::eval_all(const SamplePath& x) const {
    std::array<double, 5> out{};
    const std::size_t K = x.times.size();
    auto add = [&](double tt, double v, double w) {
        double p = v * v;
        for (int n = 2; n <= max_order; ++n) {
            out[n] += w * coef(n, tt) * p;
            p *= v;
        }
    };
    for (std::size_t k = 0; k + 1 < K; ++k) {
        const double dt = 0.5 * (x.times[k + 1] - x.times[k]);
        add(x.times[k], x.values[k], dt);
        add(x.times[k + 1], x.left_limit(k + 1), dt);
    }
    const double xT = x.values.back();
    double p = xT * xT;
    for (int n = 2; n <= max_order; ++n) {
        out[n] += d[n] * p;
        p *= xT;
    }
    return out;
}

QCoefficients q_coefficients(const FunctionalSpec& F, const ProcessModel& m, const PathGrid& phi0,
                             const TiltPath& z0, std::size_t mesh_n, int max_order) {
    if (!F.builtin())
        fail(Errc::GenericMeasureUnsupported, "Q tables need integral/terminal functional terms");
    require(mesh_n >= 2, "Q table mesh needs at least 2 intervals");
    QCoefficients q;
    q.T = phi0.T;
    q.max_order = std::clamp(std::min(max_order, F.max_order()), 2, 4);
    q.t.resize(mesh_n + 1);
    for (std::size_t k = 0; k <= mesh_n; ++k) q.t[k] = q.T * static_cast<double>(k) / static_cast<double>(mesh_n);
    const bool xdep = m.x_dependent();
    for (int n = 2; n <= q.max_order; ++n) {
        std::vector<double> cn(mesh_n + 1, 0.0);
        try {
            for (std::size_t k = 0; k <= mesh_n; ++k) {
                const double t = q.t[k], y = phi0(t);
                double v = xdep ? g0_mixed(m, t, y, z0(t), 0, n) : 0.0;
                for (const auto& term : F.integrals) v += term.g(t, y, n);
                cn[k] = v / kFact[n];
            }
        } catch (const Error& e) {
            if (e.code() != Errc::UnsupportedOrder || n == 2) throw;
            q.max_order = n - 1;
            break;
        }
        double dn = 0.0;
        for (const auto& term : F.terminals) dn += term.h(phi0.terminal(), n);
        q.c[n] = std::move(cn);
        q.d[n] = dn / kFact[n];
    }
    return q;
}

namespace {

// cumulative trapezoid integrals along the grid of x for the A_1 kernels
struct KernelTables {
    const PathGrid* x;
    std::vector<double> I1, J1, J2, J3;

    static double interp(const std::vector<double>& v, const PathGrid& g, double s) {
        const double u = std::clamp(s / g.T, 0.0, 1.0) * static_cast<double>(g.n());
        const std::size_t i = std::min(static_cast<std::size_t>(u), g.n() - 1);
        const double w = u - static_cast<double>(i);
        return v[i] + w * (v[i + 1] - v[i]);
    }
    double gamma(int k, const std::vector<double>& s) const {
        require(static_cast<int>(s.size()) == k, "need one time point per kernel argument");
        const double smin = *std::min_element(s.begin(), s.end());
        double e = 0.0;
        for (double si : s) e += interp(I1, *x, si);
        switch (k) {
            case 1: return 0.5 * interp(J1, *x, smin) * std::exp(e);
            case 2: return 0.5 * interp(J2, *x, smin) * std::exp(e);
            case 3: return interp(J3, *x, smin) * std::exp(e) / 6.0;
            default: fail(Errc::UnsupportedOrder, "A_1 kernels exist for k = 1, 2, 3");
        }
    }
};

KernelTables kernel_tables(const PathGrid& x, const ProcessModel& m, const PathGrid& phi0, const TiltPath& z0) {
    KernelTables kt;
    kt.x = &x;
    const std::size_t N = x.n();
    std::vector<double> a12(N + 1), f1(N + 1), f2(N + 1), f3(N + 1);
    for (std::size_t i = 0; i <= N; ++i) {
        const double t = x.t(i), y = phi0(t), z = z0(t), xv = x.phi[i];
        a12[i] = g0_mixed(m, t, y, z, 1, 1);
        f1[i] = g0_mixed(m, t, y, z, 1, 2) * xv * xv;
        f2[i] = g0_mixed(m, t, y, z, 2, 1) * xv;
        f3[i] = g0_mixed(m, t, y, z, 3, 0);
    }
    auto cumulate = [&](const std::vector<double>& f) {
        std::vector<double> c(N + 1, 0.0);
        for (std::size_t i = 0; i < N; ++i) c[i + 1] = c[i] + 0.5 * x.h() * (f[i] + f[i + 1]);
        return c;
    };
    kt.I1 = cumulate(a12);
    kt.J1 = cumulate(f1);
    kt.J2 = cumulate(f2);
    kt.J3 = cumulate(f3);
    return kt;
}

}  // namespace

double gamma1_kernels(int k, const PathGrid& x, const std::vector<double>& s, const ProcessModel& m,
                      const PathGrid& phi0, const TiltPath& z0) {
    require(k >= 1 && k <= 3, "k must be 1, 2 or 3");
    return kernel_tables(x, m, phi0, z0).gamma(k, s);
}

double apply_a1(const FunctionalSpec& G, const PathGrid& x, const ProcessModel& m, const PathGrid& phi0,
                const TiltPath& z0) {
    if (!G.builtin()) fail(Errc::GenericMeasureUnsupported, "A_1 needs diagonal or terminal derivative measures");
    if (G.is_constant()) return 0.0;
    const KernelTables kt = kernel_tables(x, m, phi0, z0);
    const std::size_t N = x.n();
    const double T = x.T;
    double s = 0.0;
    for (int k = 1; k <= 3; ++k) {
        for (const auto& term : G.integrals) {
            check_order(k, term.max_order);
            double acc = 0.0;
            for (std::size_t i = 0; i <= N; ++i) {
                const double t = x.t(i);
                const double w = (i == 0 || i == N) ? 0.5 : 1.0;
                acc += w * kt.gamma(k, std::vector<double>(k, t)) * term.g(t, x.phi[i], k);
            }
            s += acc * x.h();
        }
        for (const auto& term : G.terminals) {
            check_order(k, term.max_order);
            s += kt.gamma(k, std::vector<double>(k, T)) * term.h(x.terminal(), k);
        }
    }
    return s;
}

}  // namespace ldexpand
