#pragma once

#include <functional>
#include <vector>

#include "ldexpand/model.hpp"

namespace ldexpand {

struct LegendreResult {
    double value = 0.0;     // H(u)
    double argmax_z = 0.0;  // z* with g'(z*) = u
    int iterations = 0;
    bool converged = false;
};

/// A one-dimensional convex function with its first two derivatives.
struct ConvexFunction {
    std::function<double(double)> value;
    // writes g'(z) and g''(z)
    std::function<void(double, double&, double&)> derivs;
};

struct LegendreOptions {
    double tol = 1e-12;        // on |g'(z) - u|, scaled by max(1, |u|)
    double bracket = 1.0;      // initial half-width around the start point
    double z_start = 0.0;      // warm start
    int max_expansions = 60;
    int max_iterations = 200;
};

/// sup_z [z u - g(z)] by safeguarded Newton on g'(z) = u.
/// Throws NonConvexDetected, Unbounded or NoConvergence.
LegendreResult legendre_sup(const ConvexFunction& g, double u, const LegendreOptions& opt = {});

/// H0(t, x; u) = sup_z [z u - G0(t, x; z)].
LegendreResult h0(const ProcessModel& m, double t, double x, double u, const LegendreOptions& opt = {});

/// dH0/du = argmax z (envelope theorem).
double dh0_du(const ProcessModel& m, double t, double x, double u, const LegendreOptions& opt = {});

/// Worst margin of H(p) - [|p| ln(|p| + sqrt(p^2+1)) + 1 - sqrt2 |p| - sqrt2] over
/// the grid, with H the Legendre transform of the example1 cumulant.
double h_inequality_check(const std::vector<double>& u_grid);

}  // namespace ldexpand
