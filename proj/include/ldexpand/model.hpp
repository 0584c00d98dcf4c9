#pragma once

#include <cmath>
#include <functional>
#include <limits>
#include <string>
#include <string_view>
#include <vector>

#include "ldexpand/error.hpp"
#include "ldexpand/expr.hpp"
#include "ldexpand/quadrature.hpp"

namespace ldexpand {

using Fn2 = std::function<double(double t, double x)>;

/// Central finite difference of order n (1..4) in x with step
/// h = eps^(1/(n+2)) * max(1, |x|); for n = 1 this is cbrt(eps).
double fd_derivative(const std::function<double(double)>& f, double x, int n);

/// A coefficient function c(t, x) of the process, with x-derivatives that are
/// analytic when supplied and finite differences otherwise.
class Coefficient {
public:
    Coefficient() = default;  // identically zero

    static Coefficient constant(double c);
    static Coefficient function(Fn2 f, std::vector<Fn2> dx = {}, bool t_dependent = true, bool x_dependent = true,
                                int smoothness = 4);
    static Coefficient expression(const Expr& e);

    double operator()(double t, double x) const { return is_constant_ ? value_ : f_(t, x); }

    /// n-th partial derivative in x; throws UnsupportedOrder beyond the
    /// declared smoothness.
    double dx(int n, double t, double x) const;

    bool x_dependent() const { return !is_constant_ && x_dependent_; }
    bool t_dependent() const { return !is_constant_ && t_dependent_; }
    bool is_constant() const { return is_constant_; }
    bool is_zero() const { return is_constant_ && value_ == 0.0; }
    double constant_value() const { return value_; }
    int smoothness() const { return smoothness_; }

private:
    bool is_constant_ = true;
    double value_ = 0.0;
    Fn2 f_;
    std::vector<Fn2> dx_;
    bool t_dependent_ = false;
    bool x_dependent_ = false;
    int smoothness_ = std::numeric_limits<int>::max();
};

/// Jump measure nu_{t,x}(du) with bounded support: either a finite list of
/// atoms with state-dependent weights, or a density on [-U, U] integrated by
/// Gauss-Legendre quadrature.
class JumpMeasure {
public:
    struct Atom {
        double size;
        Coefficient weight;
    };
    using DensityFn = std::function<double(double t, double x, double u)>;

    static JumpMeasure none() { return JumpMeasure(); }
    static JumpMeasure atoms(std::vector<Atom> atoms);
    static JumpMeasure density(DensityFn rho, double support, int order = 32, bool t_dependent = true,
                               bool x_dependent = true);

    bool empty() const { return !is_density_ && atoms_.empty(); }
    bool is_density() const { return is_density_; }
    double support_bound() const;
    bool x_dependent() const;
    bool t_dependent() const;
    int quadrature_order() const { return order_; }
    const std::vector<Atom>& atom_list() const { return atoms_; }
    double density_value(double t, double x, double u) const { return rho_(t, x, u); }

    /// Visit the (size, weight) pairs representing the measure at (t, x). With
    /// nx > 0 the weights are replaced by their n-th x-derivatives.
    template <class F>
    void for_each_node(double t, double x, int nx, F&& f) const {
        if (is_density_) {
            const auto& rule = gauss_legendre(order_);
            for (std::size_t q = 0; q < rule.nodes.size(); ++q) {
                const double u = support_ * rule.nodes[q];
                double w;
                if (nx == 0) {
                    w = rho_(t, x, u);
                } else if (!rho_x_dependent_) {
                    w = 0.0;
                } else {
                    w = fd_derivative([&](double y) { return rho_(t, y, u); }, x, nx);
                }
                f(u, support_ * rule.weights[q] * w);
            }
        } else {
            for (const auto& a : atoms_) f(a.size, nx == 0 ? a.weight(t, x) : a.weight.dx(nx, t, x));
        }
    }

private:
    bool is_density_ = false;
    std::vector<Atom> atoms_;
    DensityFn rho_;
    double support_ = 0.0;
    int order_ = 32;
    bool rho_t_dependent_ = true;
    bool rho_x_dependent_ = true;
};

/// Locally infinitely divisible family: drift alpha(t,x), diffusion a(t,x),
/// jump measure nu_{t,x}, horizon T and start x0.
struct ProcessModel {
    std::string name;
    Coefficient alpha;
    Coefficient a;
    JumpMeasure nu;
    double T = 1.0;
    double x0 = 0.0;

    /// No (t, x) dependence in any coefficient.
    bool homogeneous() const;
    bool x_dependent() const;
    void validate() const;
};

/// G0(t,x;z) = z alpha + a z^2/2 + int (e^{zu} - 1 - zu) nu(du).
double cumulant_g0(const ProcessModel& m, double t, double x, double z);

/// G^eps(t,x;z) = G0(t,x;eps z)/eps.
double cumulant_geps(const ProcessModel& m, double t, double x, double z, double eps);

/// Mixed partial d^nz/dz^nz d^nx/dx^nx of G0.
double g0_mixed(const ProcessModel& m, double t, double x, double z, int nz, int nx);

struct G0Partials {
    double dz = 0.0;
    double dzz = 0.0;
    double dzx = 0.0;
    std::vector<double> dx;  // dx[n-1] = d^n G0 / dx^n
};

G0Partials g0_partials(const ProcessModel& m, double t, double x, double z, int x_order = 2);

/// First and second z-derivatives in one pass over the jump nodes.
void g0_dz_dzz(const ProcessModel& m, double t, double x, double z, double& dz, double& dzz);

/// Total mass int e^{zu} nu(du) of the exponentially tilted jump measure.
double tilted_jump_mass(const ProcessModel& m, double t, double x, double z);

/// int u e^{zu} nu(du).
double tilted_jump_mean(const ProcessModel& m, double t, double x, double z);

struct TiltedMoments {
    int j = 0;
    double alpha = 0.0;
    double beta = 0.0;
};

TiltedMoments tilted_moments(const ProcessModel& m, double t, double x, double z0, int j);

struct SampleBox {
    double t_min = 0.0, t_max = 1.0;
    double x_min = -1.0, x_max = 1.0;
    double z_min = -1.0, z_max = 1.0;
};

struct AssumptionReport {
    double min_dzz = std::numeric_limits<double>::infinity();
    double max_abs_dzx = 0.0;
    double max_abs_a = 0.0;
    long convexity_violations = 0;
    long samples = 0;
};

/// Lattice scan of the box with n_samples points per axis. Advisory only.
AssumptionReport check_assumptions(const ProcessModel& m, const SampleBox& box, int n_samples);

/// Builtin models: example1, example2, brownian, pide-special.
ProcessModel model_preset(std::string_view name);
std::vector<std::string> model_preset_names();

namespace detail {

constexpr double kMaxExponent = 709.782712893384;  // log(DBL_MAX)

/// d^k/dz^k of (e^{zu} - 1 - zu).
inline double jump_kernel(double z, double u, int k) {
    const double y = z * u;
    if (std::abs(y) > kMaxExponent)
        fail(Errc::Overflow, "exponent z*u = " + std::to_string(y) + " exceeds the finite range");
    if (k == 0) {
        if (std::abs(y) < 1e-2) {
            const double y2 = y * y;
            return y2 * (0.5 + y * (1.0 / 6 + y * (1.0 / 24 + y * (1.0 / 120 + y * (1.0 / 720 + y / 5040)))));
        }
        return std::expm1(y) - y;
    }
    if (k == 1) return u * std::expm1(y);
    double p = 1.0;
    for (int i = 0; i < k; ++i) p *= u;
    return p * std::exp(y);
}

}  // namespace detail

}  // namespace ldexpand
