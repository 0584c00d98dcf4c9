#pragma once

#include <memory>
#include <string>
#include <string_view>

namespace ldexpand {

/// Small arithmetic expression language used for coefficient functions in
/// config files.
///
/// Grammar: numbers, identifiers `t`, `x`, `u`, constant `pi`, binary
/// operators `+ - * / ^` (`^` is right associative), unary minus, and the
/// functions sin, cos, exp, ln, sqrt, cosh, sinh. Expressions are parsed into
/// a tree that can be evaluated and differentiated symbolically.
class Expr {
public:
    enum class Var { T, X, U };

    struct Node;

    Expr();  // the constant 0
    explicit Expr(double c);

    static Expr parse(std::string_view text);

    double operator()(double t, double x, double u = 0.0) const;

    /// Symbolic derivative with respect to one variable.
    Expr derivative(Var v) const;

    bool depends_on(Var v) const;
    bool is_constant() const { return !depends_on(Var::T) && !depends_on(Var::X) && !depends_on(Var::U); }

    std::string to_string() const;

private:
    explicit Expr(std::shared_ptr<const Node> n) : root_(std::move(n)) {}
    std::shared_ptr<const Node> root_;
};

}  // namespace ldexpand
