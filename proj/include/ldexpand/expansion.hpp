#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include "ldexpand/functionals.hpp"
#include "ldexpand/model.hpp"
#include "ldexpand/simulate.hpp"
#include "ldexpand/variational.hpp"

namespace ldexpand {

struct EstimateRecord {
    double eps = 0.0;
    long n_samples = 0;
    double log_leading = 0.0;  // gap / eps
    double prefactor_mean = 0.0;
    double prefactor_se = 0.0;
    long n_clipped = 0;
    double h = 0.0;
    // fraction of paths with sup |eta| >= eps^{-1/2}
    double tail_fraction = 0.0;
    double tail_se = 0.0;
    // E|eta_t|^2 and E|eta_t|^4 at t = T/4, T/2, T
    std::array<double, 3> m2{}, m4{}, m4_se{};
    // Taylor diagnostics of the exponent
    int q_order = 0;
    double mean_q2 = 0.0;
    double mean_abs_taylor_residual = 0.0;

    double total() const { return log_leading + std::log(prefactor_mean); }
};

struct PrefactorOptions {
    std::size_t n = 100000;
    std::uint64_t seed = 1;
    double h = 3.0;  // localization radius on sup |xi - phi0|
    int workers = 1;
    double dt = 0.0;
    double envelope_margin = 1.5;
    std::string dump_dir;  // per-path CSVs when non-empty
    int dump_paths = 0;
};

/// SE floor for estimators whose samples have (near) zero spread.
double se_floor(double mean);

EstimateRecord estimate_prefactor(const ProcessModel& m, const FunctionalSpec& F, const FunctionalSpec& H,
                                  const ExtremalSolution& sol, double eps, const PrefactorOptions& opt);

struct K0Estimate {
    double value = 0.0;
    double se = 0.0;
    double h_phi0 = 0.0;
    // E[exp{Q(2,eta)} (Q(3,eta) H(phi0) + H'(phi0)(eta))]
    double k1_gauss = 0.0;
    double k1_gauss_se = 0.0;
    bool k1_available = false;
};

struct K0Options {
    std::size_t n = 100000;
    std::uint64_t seed = 1;
    std::size_t steps = 2000;
    int workers = 1;
};

K0Estimate estimate_k0(const FunctionalSpec& F, const FunctionalSpec& H, const ProcessModel& m,
                       const ExtremalSolution& sol, const K0Options& opt);

struct CoefficientFit {
    std::vector<double> eps;
    int n_terms = 0;
    double K0 = 0.0, K1 = 0.0, K2 = 0.0;
    double K0_se = 0.0, K1_se = 0.0, K2_se = 0.0;
    double cov01 = 0.0;
    double chi2 = 0.0;
    double condition = 0.0;
    std::vector<double> residuals;
};

/// SE-weighted least squares of prefactor against 1, sqrt(eps) (and eps when
/// there are at least four points).
CoefficientFit fit_coefficients(const std::vector<EstimateRecord>& records);

struct SweepResult {
    std::vector<EstimateRecord> records;
    CoefficientFit fit;
    K0Estimate k0;
};

struct SweepOptions {
    std::vector<double> eps_grid{0.4, 0.2, 0.1, 0.05};
    PrefactorOptions prefactor;
    K0Options k0;
};

SweepResult epsilon_sweep(const ProcessModel& m, const FunctionalSpec& F, const FunctionalSpec& H,
                          const ExtremalSolution& sol, const SweepOptions& opt);

struct RoughLdRow {
    double eps = 0.0;
    double eps_log_total = 0.0;  // eps * total log estimate
    double deviation = 0.0;      // eps * ln(prefactor)
    double se = 0.0;
};

struct RoughLdReport {
    std::vector<RoughLdRow> rows;
    bool shrinks = false;            // |dev(last)| <= |dev(first)| + 2 combined SE
    bool monotone_in_bands = false;  // same check for every consecutive pair
};

RoughLdReport rough_ld_check(const std::vector<EstimateRecord>& records, double gap);

struct TailEstimate {
    double fraction = 0.0;
    double se = 0.0;
};

/// Fraction of tilted paths with sup |eta^eps| >= radius; radius < 0 means
/// eps^{-1/2}, +infinity gives 0.
TailEstimate tail_probability(const ProcessModel& m, const ExtremalSolution& sol, double eps, std::size_t n,
                              std::uint64_t seed, double radius = -1.0, int workers = 1);

struct MomentRow {
    double eps = 0.0;
    double t = 0.0;
    double moment = 0.0;
    double se = 0.0;
};

struct MomentTable {
    int k = 0;
    std::vector<MomentRow> rows;
    bool bounded = false;  // every value <= 3x the value at the first eps, same t
};

MomentTable moment_check(const ProcessModel& m, const ExtremalSolution& sol, int k,
                         const std::vector<double>& eps_grid, std::size_t n, std::uint64_t seed, int workers = 1);

/// Multiplies the path by exp{-int_0^t g}.
SamplePath tilde_eta_transform(const SamplePath& path, const std::function<double(double)>& g);

/// Seed for the i-th member of a sweep, derived from the root seed.
std::uint64_t derive_seed(std::uint64_t root, std::uint64_t i);

}  // namespace ldexpand
