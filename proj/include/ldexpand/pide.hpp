#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "ldexpand/model.hpp"

namespace ldexpand {

/// u_t = (eps/2) a u_xx + b u_x + eps^-1 int [u(x+eps y) - u - eps y u_x] nu(dy) + eps^-1 c u,
/// with b the model drift alpha.
struct Grid1D {
    double x_min = -8.0;
    double x_max = 8.0;
    std::size_t nx = 801;
    std::size_t nt = 0;  // 0: pick from dt_target and the stability bound
    double eps = 0.5;
    double t_end = 1.0;

    double dx() const { return (x_max - x_min) / static_cast<double>(nx - 1); }
    double x(std::size_t i) const { return x_min + dx() * static_cast<double>(i); }
    void validate() const;
};

/// 6 sqrt(eps a_max t_end) + eps U rate t_end, sampled on [-1, 1].
double required_margin(const ProcessModel& m, double eps, double t_end);

using InitialDatum = std::function<double(double)>;

/// "one", "bump" (exp(-x^2/2)) or an expression in x.
InitialDatum initial_datum(const std::string& spec);

struct FdOptions {
    std::vector<double> snapshots;  // extra output times; 0 and t_end are always kept
    double dt_target = 1e-3;
    std::size_t nt_ceiling = 1000000;
    bool check_leak = true;
};

struct PideSolution {
    Grid1D grid;
    double dt = 0.0;
    std::size_t nt = 0;
    std::vector<double> x;
    std::vector<double> times;
    std::vector<std::vector<double>> u;  // u[k][i] at times[k], x[i]
    std::string boundary = "linear extrapolation";
    double leak_ratio = 0.0;

    /// Cubic interpolation in x at snapshot k.
    double value(std::size_t k, double xq) const;
    /// Snapshot index of time t (throws when absent).
    std::size_t snapshot(double t) const;
};

PideSolution solve_fd(const ProcessModel& m, const Coefficient& c, const InitialDatum& g, const Grid1D& grid,
                      const FdOptions& opt = {});

struct McEstimate {
    double t = 0.0;
    double mean = 0.0;
    double se = 0.0;
};

struct FkOptions {
    std::size_t n = 100000;
    std::uint64_t seed = 1;
    double dt = 0.0025;
    int workers = 1;
};

/// E g(xi_t) exp{eps^-1 int_0^t c(xi_s) ds} for each t, from one set of paths started at x.
std::vector<McEstimate> feynman_kac_mc(const ProcessModel& m, const InitialDatum& g, const Coefficient& c,
                                       double eps, const std::vector<double>& times, double x,
                                       const FkOptions& opt);
McEstimate feynman_kac_mc(const ProcessModel& m, const InitialDatum& g, const Coefficient& c, double eps, double t,
                          double x, const FkOptions& opt);

struct Probe {
    double t = 0.0;
    double x = 0.0;
};

std::vector<Probe> default_probes();

struct CompareRow {
    double t = 0.0, x = 0.0;
    double u_fd = 0.0;
    double u_factorized = 0.0;  // e^{t/eps} times the c = 0 solution
    double u_mc = 0.0, u_mc_se = 0.0;
    double scaled = 0.0;        // e^{-t/eps} u_fd
    double rel_fd_mc = 0.0;
    double rel_factorization = 0.0;
};

struct CompareReport {
    double eps = 0.0;
    std::vector<CompareRow> rows;
    double max_rel_fd_mc = 0.0;
    double max_rel_factorization = 0.0;
    bool scaled_bounded = false;   // e^{-t/eps} u <= max|g| at every probe
    double max_rel_one = -1.0;     // g = 1 only: max |u e^{-t/eps} - 1| over the grid
    PideSolution solution;         // full equation, probe times as snapshots
};

struct SpecificCaseOptions {
    std::vector<Probe> probes = default_probes();
    FkOptions mc;
    FdOptions fd;
    bool g_is_one = false;
};

/// Model with c = 1: FD, MC and factorized FD at the probes.
CompareReport specific_case_check(const ProcessModel& m, const Coefficient& c, const InitialDatum& g,
                                  const Grid1D& grid, const SpecificCaseOptions& opt);

struct ProbeFit {
    double t = 0.0, x = 0.0;
    double k0 = 0.0, k0_lo = 0.0, k0_hi = 0.0;
    double k1 = 0.0, k1_lo = 0.0, k1_hi = 0.0;
    double flow_limit = 0.0;  // g(X_t(x)) with X' = b(t, X)
};

struct AsymptoticReport {
    std::vector<double> eps;
    std::vector<ProbeFit> fits;
    double condition = 0.0;
};

/// Fits e^{-t/eps} u^eps(t,x) against 1, sqrt(eps) at each probe with 95% Student-t intervals.
AsymptoticReport asymptotic_compare(const ProcessModel& m, const Coefficient& c, const InitialDatum& g,
                                    const Grid1D& grid, const std::vector<double>& eps_list,
                                    const std::vector<Probe>& probes, const FdOptions& opt = {});

}  // namespace ldexpand
