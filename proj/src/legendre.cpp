#include "ldexpand/legendre.hpp"

#include <algorithm>
#include <cmath>

namespace ldexpand {

namespace {

// g'(z) - u, turning overflow during bracket search into an unbounded transform
double residual(const ConvexFunction& g, double z, double u, double& d2, bool& overflow) {
    double d1 = 0.0;
    d2 = 0.0;
    try {
        g.derivs(z, d1, d2);
    } catch (const Error& e) {
        if (e.code() != Errc::Overflow) throw;
        overflow = true;
        return 0.0;
    }
    return d1 - u;
}

}  // namespace

LegendreResult legendre_sup(const ConvexFunction& g, double u, const LegendreOptions& opt) {
    require(std::isfinite(u), "legendre_sup: u must be finite");
    const double tol = opt.tol * std::max(1.0, std::abs(u));
    LegendreResult res;

    bool overflow = false;
    double d2 = 0.0;
    double z = opt.z_start;
    double r = residual(g, z, u, d2, overflow);
    if (overflow) {
        z = 0.0;
        overflow = false;
        r = residual(g, z, u, d2, overflow);
    }
    if (std::abs(r) <= tol) {
        res.argmax_z = z;
        res.value = z * u - g.value(z);
        res.converged = true;
        return res;
    }

    // march away from z in the direction of the root, doubling the step
    double lo = z, hi = z, r_lo = r, r_hi = r;
    const double dir = r < 0.0 ? 1.0 : -1.0;
    double step = opt.bracket;
    double prev = r;
    int k = 0;
    for (; k < opt.max_expansions; ++k) {
        const double zn = z + dir * step;
        double dd = 0.0;
        const double rn = residual(g, zn, u, dd, overflow);
        if (overflow) break;
        if ((rn - prev) * dir < -1e-12 * std::max(1.0, std::abs(prev)))
            fail(Errc::NonConvexDetected, "derivative is not monotone near z=" + std::to_string(zn));
        if (dir > 0) {
            hi = zn;
            r_hi = rn;
        } else {
            lo = zn;
            r_lo = rn;
        }
        if ((rn >= 0.0) == (dir > 0)) break;
        if (dir > 0) {
            lo = zn;
            r_lo = rn;
        } else {
            hi = zn;
            r_hi = rn;
        }
        prev = rn;
        step *= 2.0;
    }
    if (overflow || k == opt.max_expansions || r_lo > 0.0 || r_hi < 0.0)
        fail(Errc::Unbounded, "u=" + std::to_string(u) + " lies outside the gradient range of the cumulant");

    // Newton inside [lo, hi], bisecting whenever the step leaves the bracket
    z = std::abs(r_lo) < std::abs(r_hi) ? lo : hi;
    for (int it = 1; it <= opt.max_iterations; ++it) {
        r = residual(g, z, u, d2, overflow);
        if (overflow) fail(Errc::Overflow, "cumulant overflow inside the bracket");
        res.iterations = it;
        if (std::abs(r) <= tol) {
            res.converged = true;
            break;
        }
        if (r < 0.0)
            lo = z;
        else
            hi = z;
        double zn = d2 > 0.0 ? z - r / d2 : 0.5 * (lo + hi);
        if (!(zn > lo && zn < hi)) zn = 0.5 * (lo + hi);
        if (zn == z || hi - lo <= 4.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, std::abs(z))) {
            // bracket collapsed to rounding level
            res.converged = std::abs(r) <= 1e3 * tol;
            break;
        }
        z = zn;
    }
    if (!res.converged)
        fail(Errc::NoConvergence, "Legendre solve did not converge for u=" + std::to_string(u));
    res.argmax_z = z;
    res.value = z * u - g.value(z);
    return res;
}

LegendreResult h0(const ProcessModel& m, double t, double x, double u, const LegendreOptions& opt) {
    ConvexFunction g{[&](double z) { return cumulant_g0(m, t, x, z); },
                     [&](double z, double& d1, double& d2) { g0_dz_dzz(m, t, x, z, d1, d2); }};
    return legendre_sup(g, u, opt);
}

double dh0_du(const ProcessModel& m, double t, double x, double u, const LegendreOptions& opt) {
    return h0(m, t, x, u, opt).argmax_z;
}

double h_inequality_check(const std::vector<double>& u_grid) {
    const ProcessModel m = model_preset("example1");
    const double r2 = std::sqrt(2.0);
    double worst = std::numeric_limits<double>::infinity();
    for (double p : u_grid) {
        const double ap = std::abs(p);
        const double rhs = ap * std::log(ap + std::sqrt(p * p + 1.0)) + 1.0 - r2 * ap - r2;
        worst = std::min(worst, h0(m, 0.0, 0.0, p).value - rhs);
    }
    return worst;
}

}  // namespace ldexpand
