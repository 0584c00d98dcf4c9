#include <array>
#include <cmath>
#include <optional>

#include <boost/math/tools/roots.hpp>
#include <boost/numeric/odeint.hpp>

#include "ldexpand/variational.hpp"

namespace ldexpand {

namespace {

using State = std::array<double, 4>;  // phi, z, int g dt, int (g - H0(phi')) dt

struct Hamiltonian {
    const FunctionalSpec& F;
    const ProcessModel& m;

    void operator()(const State& s, State& ds, double t) const {
        const double phi = s[0], z = s[1];
        if (!std::isfinite(phi) || !std::isfinite(z) || std::abs(z) > 700.0)
            fail(Errc::Overflow, "shooting trajectory left the finite range");
        double gz = 0.0, gzz = 0.0;
        g0_dz_dzz(m, t, phi, z, gz, gzz);
        double g = 0.0, gy = 0.0;
        for (const auto& term : F.integrals) {
            g += term.g(t, phi, 0);
            gy += term.g(t, phi, 1);
        }
        ds[0] = gz;
        ds[1] = -gy;
        ds[2] = g;
        // H0(phi') = z G_z - G0 along the Hamiltonian flow
        ds[3] = g - (z * gz - cumulant_g0(m, t, phi, z));
    }
};

double terminal_slope(const FunctionalSpec& F, double y) {
    double s = 0.0;
    for (const auto& term : F.terminals) s += term.h(y, 1);
    return s;
}

// integrates from z(0) = s and records the state at the requested times
State integrate(const Hamiltonian& sys, double s, double T, double tol, const std::vector<double>* times = nullptr,
                std::vector<State>* out = nullptr) {
    namespace odeint = boost::numeric::odeint;
    State x{0.0, s, 0.0, 0.0};
    auto stepper = odeint::make_dense_output(tol, tol, odeint::runge_kutta_dopri5<State>());
    if (times) {
        odeint::integrate_times(stepper, std::cref(sys), x, times->begin(), times->end(), T * 1e-3,
                                [&](const State& st, double) { out->push_back(st); });
    } else {
        odeint::integrate_adaptive(stepper, std::cref(sys), x, 0.0, T, T * 1e-3);
    }
    return x;
}

}  // namespace

ExtremalSolution euler_lagrange_shoot(const FunctionalSpec& F, const ProcessModel& m, const ShootOptions& opt) {
    if (!F.generics.empty())
        fail(Errc::NotApplicable, "shooting needs an integral/terminal functional");
    if (m.x_dependent() || !m.homogeneous())
        fail(Errc::NotApplicable, "shooting needs a cumulant without (t, x) dependence");
    require(opt.n >= 2, "output grid needs n >= 2");
    const double T = m.T;
    const Hamiltonian sys{F, m};

    auto residual = [&](double s) -> std::optional<double> {
        try {
            const State x = integrate(sys, s, T, opt.tol);
            return x[1] - terminal_slope(F, x[0]);
        } catch (const Error&) {
            return std::nullopt;
        }
    };

    // bracket z(0) by doubling away from 0 in the downhill direction of |R|
    std::optional<double> r0 = residual(0.0);
    if (!r0) fail(Errc::BracketNotFound, "shooting from z(0)=0 leaves the finite range");
    double s_root = 0.0;
    if (*r0 != 0.0) {
        double lo = 0.0, rlo = *r0, hi = 0.0, rhi = *r0;
        bool found = false;
        for (double dir : {-1.0, 1.0}) {
            double prev_s = 0.0, prev_r = *r0, step = 0.125;
            for (int k = 0; k < 60; ++k) {
                const double s = dir * step;
                const auto r = residual(s);
                if (!r) break;
                if ((*r > 0.0) != (prev_r > 0.0) || *r == 0.0) {
                    lo = std::min(prev_s, s);
                    hi = std::max(prev_s, s);
                    rlo = lo == s ? *r : prev_r;
                    rhi = hi == s ? *r : prev_r;
                    found = true;
                    break;
                }
                prev_s = s;
                prev_r = *r;
                step *= 2.0;
            }
            if (found) break;
        }
        if (!found) fail(Errc::BracketNotFound, "no sign change of the transversality residual");
        auto f = [&](double s) {
            const auto r = residual(s);
            if (!r) fail(Errc::BracketNotFound, "trajectory diverged inside the bracket");
            return *r;
        };
        boost::math::tools::eps_tolerance<double> tol(52);
        std::uintmax_t iters = 200;
        const auto br = boost::math::tools::toms748_solve(f, lo, hi, rlo, rhi, tol, iters);
        s_root = 0.5 * (br.first + br.second);
        const auto rr = residual(s_root);
        if (!rr || std::abs(*rr) > opt.residual_tol) {
            // take whichever bracket end is closer to zero
            const double a = std::abs(f(br.first)), b = std::abs(f(br.second));
            s_root = a < b ? br.first : br.second;
            if (std::min(a, b) > opt.residual_tol)
                fail(Errc::NoConvergence, "shooting residual " + std::to_string(std::min(a, b)) +
                                              " above tolerance");
        }
    }

    // sample nodes and midpoints
    const std::size_t n = opt.n;
    std::vector<double> times(2 * n + 1);
    for (std::size_t k = 0; k <= 2 * n; ++k) times[k] = T * static_cast<double>(k) / static_cast<double>(2 * n);
    std::vector<State> states;
    states.reserve(times.size());
    integrate(sys, s_root, T, opt.tol, &times, &states);
    require(states.size() == times.size(), "dense output returned an unexpected number of samples");

    ExtremalSolution sol;
    sol.phi0 = PathGrid(T, n);
    sol.z0.resize(n);
    for (std::size_t i = 0; i <= n; ++i) sol.phi0.phi[i] = states[2 * i][0];
    for (std::size_t i = 0; i < n; ++i) sol.z0[i] = states[2 * i + 1][1];
    sol.z0_path = tilt_path_from_midpoints(sol.phi0, sol.z0);
    const State& end = states.back();
    double terminal = F.constant;
    for (const auto& term : F.terminals) terminal += term.h(end[0], 0);
    sol.value_F = end[2] + terminal;
    sol.gap = end[3] + terminal;
    sol.value_S = sol.value_F - sol.gap;
    sol.diag.n_starts = 1;
    sol.diag.n_converged = 1;
    sol.diag.z0_terminal = end[1];
    sol.diag.grad_norm = std::abs(end[1] - terminal_slope(F, end[0]));
    return sol;
}

}  // namespace ldexpand
