#pragma once

#include <functional>
#include <optional>
#include <vector>

#include "ldexpand/functionals.hpp"
#include "ldexpand/model.hpp"
#include "ldexpand/path.hpp"

namespace ldexpand {

/// S(phi) or the explicit infinite variant.
struct ActionValue {
    bool infinite = false;
    double value = 0.0;

    static ActionValue inf() { return {true, 0.0}; }
    bool finite() const { return !infinite; }
};

/// Midpoint rule in t on the per-interval slopes.
ActionValue action_s(const ProcessModel& m, const PathGrid& path);

struct SolverDiagnostics {
    int n_starts = 0;
    int n_converged = 0;
    double gap_spread = 0.0;       // max |gap_k - gap_best| over converged starts
    double path_spread = 0.0;      // max sup-distance to the best path
    bool non_unique_suspected = false;
    double hessian_max_eig = 0.0;  // largest eigenvalue of the Hessian of F - S, scaled by 1/h
    double grad_norm = 0.0;        // max |d(F - S)/d phi_i| / h at the optimum
    int iterations = 0;
    double z0_terminal = 0.0;      // z0(T), extrapolated from the interval midpoints
};

struct Refinement {
    std::vector<int> grids;
    std::vector<double> gaps;
    std::vector<double> z0_terminal;
    double gap_extrapolated = 0.0;
    double z0_terminal_extrapolated = 0.0;
    double error_estimate = 0.0;
    double order = 0.0;  // NaN when the grids agree to rounding
};

struct ExtremalSolution {
    PathGrid phi0;
    std::vector<double> z0;  // interval midpoints
    TiltPath z0_path;
    double value_F = 0.0;
    double value_S = 0.0;
    double gap = 0.0;
    SolverDiagnostics diag;
    std::optional<Refinement> refinement;

    /// Gap to use for the leading exponential: the extrapolated one when known.
    double best_gap() const { return refinement ? refinement->gap_extrapolated : gap; }
};

struct DirectOptions {
    std::size_t n = 200;
    int multistarts = 5;
    int workers = 1;
    double grad_tol = 1e-11;  // on max |dJ/dphi_i| / h
    std::vector<PathGrid> extra_starts;
};

ExtremalSolution maximize_direct(const FunctionalSpec& F, const ProcessModel& m, const DirectOptions& opt = {});

struct ShootOptions {
    std::size_t n = 1000;  // output grid
    double tol = 1e-13;    // ODE tolerance
    double residual_tol = 1e-10;
};

ExtremalSolution euler_lagrange_shoot(const FunctionalSpec& F, const ProcessModel& m, const ShootOptions& opt = {});

/// Tilt values dH0/du at the interval midpoints of phi0.
std::vector<double> extract_z0(const ProcessModel& m, const PathGrid& phi0);

/// Knots at the interval midpoints.
TiltPath tilt_path_from_midpoints(const PathGrid& phi0, const std::vector<double>& z_mid);

/// Solves at n, 2n, 4n and Richardson-extrapolates the gap assuming an
/// O(n^-2) error. Returns the finest solution with its refinement record.
ExtremalSolution refine_and_extrapolate(const std::function<ExtremalSolution(std::size_t)>& solve, std::size_t n);

/// Richardson step on three gaps from n, 2n, 4n; fills order and estimate.
Refinement richardson(const std::vector<int>& grids, const std::vector<double>& gaps,
                      const std::vector<double>& z0_terminal);

}  // namespace ldexpand
