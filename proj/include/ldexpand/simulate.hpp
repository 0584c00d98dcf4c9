#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "ldexpand/model.hpp"
#include "ldexpand/path.hpp"
#include "ldexpand/rng.hpp"

namespace ldexpand {

struct SimConfig {
    double eps = 0.1;
    double dt = 0.0;      // 0 means T/2000
    std::uint64_t seed = 1;
    double envelope_margin = 1.5;
    int retry_budget = 100;
    double t_end = -1.0;  // negative means model.T
    double x0 = std::numeric_limits<double>::quiet_NaN();  // NaN means model.x0
    const Coefficient* reaction = nullptr;  // accumulates int c(xi) dt when set

    double horizon(const ProcessModel& m) const { return t_end >= 0.0 ? t_end : m.T; }
    double step(const ProcessModel& m) const { return dt > 0.0 ? dt : horizon(m) / 2000.0; }
    double start(const ProcessModel& m) const { return std::isnan(x0) ? m.x0 : x0; }
};

/// Reusable simulator for one (model, tilt, config). Per-mesh coefficient
/// tables are built once when the coefficients do not depend on x; paths are
/// pure functions of (config, path index).
class TiltedSimulator {
public:
    TiltedSimulator(const ProcessModel& m, const TiltPath& z0, const SimConfig& cfg);

    SamplePath run(std::uint64_t path_index) const;
    void run(std::uint64_t path_index, SamplePath& out) const;

    const ProcessModel& model() const { return m_; }
    const SimConfig& config() const { return cfg_; }

private:
    double rate(double t, double x, double z) const;
    double drift(double t, double x, double z) const;
    double compensator(double t, double x) const;  // int u nu(du)
    double draw_jump(double t, double x, double z, Xoshiro256& rng) const;

    const ProcessModel& m_;
    TiltPath z0_;
    SimConfig cfg_;
    double T_, dt_;
    std::size_t steps_;
    bool xdep_;
    bool nu_xdep_ = true;
    // mesh tables (state independent part)
    std::vector<double> tk_, zk_, rate_k_, drift_k_, a_k_, g0_k_, comp_k_;
    long double g0_total_ = 0.0L;
};

SamplePath simulate_original(const ProcessModel& m, const SimConfig& cfg, std::uint64_t path_index = 0);
SamplePath simulate_tilted(const ProcessModel& m, const TiltPath& z0, const SimConfig& cfg,
                           std::uint64_t path_index = 0);

/// eta = (xi - phi0) / sqrt(eps) on the skeleton.
SamplePath rescale_to_eta(const SamplePath& path, const PathGrid& phi0, double eps);

/// Exact transition tables for d eta = g(t) eta dt + sqrt(A(t)) dW on a
/// uniform mesh: eta_{k+1} = m_k eta_k + s_k N(0,1).
struct LimitDiffusion {
    double T = 1.0;
    std::vector<double> t, m, s;
};

LimitDiffusion limit_diffusion(const std::function<double(double)>& A, const std::function<double(double)>& g,
                               double T, std::size_t steps);

struct LimitConfig {
    double T = 1.0;
    std::size_t steps = 2000;
    std::uint64_t seed = 1;
};

SamplePath simulate_limit_eta(const std::function<double(double)>& A, const std::function<double(double)>& g,
                              const LimitConfig& cfg, double x_start, std::uint64_t path_index = 0);

/// Right-continuous value at t (linear between skeleton points).
double value_at(const SamplePath& p, double t);

/// CSV with columns t,value,is_jump,jump_size.
void write_path_csv(const SamplePath& p, const std::string& file);

}  // namespace ldexpand
