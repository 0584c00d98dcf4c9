#pragma once

#include <cstddef>
#include <vector>

namespace ldexpand {

/// Piecewise-linear path on the uniform grid t_i = i T / n.
struct PathGrid {
    double T = 1.0;
    std::vector<double> phi;  // n + 1 values, phi[0] = 0

    PathGrid() = default;
    PathGrid(double T_, std::size_t n) : T(T_), phi(n + 1, 0.0) {}

    std::size_t n() const { return phi.empty() ? 0 : phi.size() - 1; }
    double h() const { return T / static_cast<double>(n()); }
    double t(std::size_t i) const { return T * static_cast<double>(i) / static_cast<double>(n()); }
    double slope(std::size_t i) const { return (phi[i + 1] - phi[i]) / h(); }
    double operator()(double t) const;
    double terminal() const { return phi.back(); }

    /// Linear interpolant of this path on a grid with m intervals.
    PathGrid resampled(std::size_t m) const;
};

double sup_distance(const PathGrid& a, const PathGrid& b);

/// Tilt path z0(t): piecewise linear through knot values, extended linearly
/// beyond the first and last knots.
class TiltPath {
public:
    TiltPath() : TiltPath(0.0) {}
    explicit TiltPath(double c) : knots_{0.0}, values_{c} {}
    TiltPath(std::vector<double> knots, std::vector<double> values);

    double operator()(double t) const;
    bool is_constant() const { return knots_.size() == 1; }
    bool is_zero() const { return is_constant() && values_[0] == 0.0; }
    const std::vector<double>& knots() const { return knots_; }
    const std::vector<double>& values() const { return values_; }

private:
    std::vector<double> knots_, values_;
};

/// Simulated cadlag path. values[k] is the post-jump value at times[k];
/// jump[k] is the jump that happened exactly at times[k] (0 when none), so the
/// left limit there is values[k] - jump[k].
struct SamplePath {
    std::vector<double> times;
    std::vector<double> values;
    std::vector<double> jump;
    std::size_t n_jumps = 0;
    // pathwise integrals accumulated during simulation
    long double int_z_dxi = 0.0L;
    long double int_g0_dt = 0.0L;
    long double int_c_dt = 0.0L;

    double left_limit(std::size_t k) const { return values[k] - jump[k]; }
    double terminal() const { return values.back(); }
    void reserve(std::size_t n) {
        times.reserve(n);
        values.reserve(n);
        jump.reserve(n);
    }
    void push(double t, double v, double j = 0.0) {
        times.push_back(t);
        values.push_back(v);
        jump.push_back(j);
        if (j != 0.0) ++n_jumps;
    }
};

/// max |value| over the skeleton, both sides of every jump included.
double sup_norm(const SamplePath& p);

}  // namespace ldexpand
