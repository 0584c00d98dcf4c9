#pragma once

#include <array>
#include <functional>
#include <string>
#include <string_view>
#include <vector>

#include "ldexpand/expr.hpp"
#include "ldexpand/model.hpp"
#include "ldexpand/path.hpp"

namespace ldexpand {

/// int_0^T g(t, phi(t)) dt. g(t, y, n) returns the n-th y-derivative.
struct IntegralTerm {
    std::function<double(double t, double y, int n)> g;
    int max_order = 4;
};

/// h(phi(T)). h(y, n) returns the n-th derivative.
struct TerminalTerm {
    std::function<double(double y, int n)> h;
    int max_order = 4;
};

/// Opaque functional with an optional user pairing for its derivative
/// measures. Paths are handed over as functions of t on [0, T].
struct GenericTerm {
    using PathFn = std::function<double(double)>;
    std::function<double(const PathFn& path, double T)> eval;
    std::function<double(const PathFn& base, int order, const std::vector<PathFn>& dirs, double T)> pairing;
    int max_order = 0;
};

struct FunctionalSpec {
    std::string name;
    double constant = 0.0;
    std::vector<IntegralTerm> integrals;
    std::vector<TerminalTerm> terminals;
    std::vector<GenericTerm> generics;

    bool builtin() const { return generics.empty(); }
    bool is_constant() const { return integrals.empty() && terminals.empty() && generics.empty(); }
    int max_order() const;

    static FunctionalSpec constant_value(double c);
    static FunctionalSpec integral(std::function<double(double, double, int)> g, int max_order = 4);
    static FunctionalSpec terminal(std::function<double(double, int)> h, int max_order = 4);
    /// Integral or terminal term from an expression in t and x (x stands for
    /// the path value); derivatives are symbolic.
    static FunctionalSpec integral_expr(const Expr& e);
    static FunctionalSpec terminal_expr(const Expr& e);

    FunctionalSpec& operator+=(const FunctionalSpec& o);
};

/// Presets: example1-F, terminal-linear:L, quadratic-penalty:K, zero, one (alias H-one).
FunctionalSpec functional_preset(std::string_view spec);

/// Gauss-Legendre on each linear piece of a grid path (exact for polynomial
/// integrands), trapezoid between skeleton points for a simulated path.
double eval_functional(const FunctionalSpec& F, const PathGrid& path);
double eval_functional(const FunctionalSpec& F, const SamplePath& path);

/// F^(j)(base)(d_1, ..., d_j) for the diagonal/terminal measures of builtin
/// terms; directions share the base grid.
double derivative_pairing(const FunctionalSpec& F, const PathGrid& base, int order,
                          const std::vector<PathGrid>& dirs);

/// Q(n, x) = F^(n)(phi0)(x, ..., x)/n! + int x^n/n! d^nG0/dx^n(t, phi0, z0) dt.
double q_functional(int n, const PathGrid& x, const FunctionalSpec& F, const ProcessModel& m,
                    const PathGrid& phi0, const TiltPath& z0);

/// Q(n, .) coefficients tabulated on a uniform mesh so a simulated path can be
/// paired in one trapezoid pass:
///   Q(n, x) = int c_n(t) x(t)^n dt + d_n x(T)^n.
struct QCoefficients {
    double T = 1.0;
    int max_order = 2;
    std::vector<double> t;
    std::array<std::vector<double>, 5> c;
    std::array<double, 5> d{};

    double coef(int n, double tt) const;
    /// Pairing with a simulated path (cadlag, trapezoid between skeleton points).
    double eval(int n, const SamplePath& x) const;
    /// Q(2..max_order) in one pass; out[n] holds Q(n, x).
    std::array<double, 5> eval_all(const SamplePath& x) const;
};

QCoefficients q_coefficients(const FunctionalSpec& F, const ProcessModel& m, const PathGrid& phi0,
                             const TiltPath& z0, std::size_t mesh_n, int max_order = 4);

/// Gamma_1^k(x; s_1..s_k) for k in {1,2,3}.
double gamma1_kernels(int k, const PathGrid& x, const std::vector<double>& s, const ProcessModel& m,
                      const PathGrid& phi0, const TiltPath& z0);

/// A_1 G(x) with G's derivative measures taken at x.
double apply_a1(const FunctionalSpec& G, const PathGrid& x, const ProcessModel& m, const PathGrid& phi0,
                const TiltPath& z0);

}  // namespace ldexpand
