#include "ldexpand/expr.hpp"

#include <cctype>
#include <cmath>
#include <numbers>
#include <sstream>
#include <vector>

#include "ldexpand/error.hpp"

namespace ldexpand {

enum class Op { Const, Var, Add, Sub, Mul, Div, Pow, Neg, Sin, Cos, Exp, Ln, Sqrt, Cosh, Sinh };

struct Expr::Node {
    Op op;
    double value = 0.0;
    Var var = Var::X;
    std::shared_ptr<const Node> a, b;
};

namespace {

using NodePtr = std::shared_ptr<const Expr::Node>;

NodePtr make_const(double c) {
    auto n = std::make_shared<Expr::Node>();
    n->op = Op::Const;
    n->value = c;
    return n;
}

NodePtr make_var(Expr::Var v) {
    auto n = std::make_shared<Expr::Node>();
    n->op = Op::Var;
    n->var = v;
    return n;
}

bool is_const(const NodePtr& n, double c) { return n->op == Op::Const && n->value == c; }

NodePtr make(Op op, NodePtr a, NodePtr b = nullptr) {
    // constant folding keeps derivative trees small
    if (a->op == Op::Const && (!b || b->op == Op::Const)) {
        double x = a->value, y = b ? b->value : 0.0;
        switch (op) {
            case Op::Add: return make_const(x + y);
            case Op::Sub: return make_const(x - y);
            case Op::Mul: return make_const(x * y);
            case Op::Div: if (y != 0.0) return make_const(x / y); break;
            case Op::Pow: return make_const(std::pow(x, y));
            case Op::Neg: return make_const(-x);
            default: break;
        }
    }
    switch (op) {
        case Op::Add:
            if (is_const(a, 0.0)) return b;
            if (is_const(b, 0.0)) return a;
            break;
        case Op::Sub:
            if (is_const(b, 0.0)) return a;
            if (is_const(a, 0.0)) return make(Op::Neg, b);
            break;
        case Op::Mul:
            if (is_const(a, 0.0) || is_const(b, 0.0)) return make_const(0.0);
            if (is_const(a, 1.0)) return b;
            if (is_const(b, 1.0)) return a;
            break;
        case Op::Div:
            if (is_const(a, 0.0)) return make_const(0.0);
            if (is_const(b, 1.0)) return a;
            break;
        case Op::Pow:
            if (is_const(b, 0.0)) return make_const(1.0);
            if (is_const(b, 1.0)) return a;
            break;
        default: break;
    }
    auto n = std::make_shared<Expr::Node>();
    n->op = op;
    n->a = std::move(a);
    n->b = std::move(b);
    return n;
}

double eval(const Expr::Node& n, double t, double x, double u) {
    switch (n.op) {
        case Op::Const: return n.value;
        case Op::Var: return n.var == Expr::Var::T ? t : (n.var == Expr::Var::X ? x : u);
        case Op::Add: return eval(*n.a, t, x, u) + eval(*n.b, t, x, u);
        case Op::Sub: return eval(*n.a, t, x, u) - eval(*n.b, t, x, u);
        case Op::Mul: return eval(*n.a, t, x, u) * eval(*n.b, t, x, u);
        case Op::Div: return eval(*n.a, t, x, u) / eval(*n.b, t, x, u);
        case Op::Pow: {
            double base = eval(*n.a, t, x, u);
            if (n.b->op == Op::Const) {
                double p = n.b->value;
                if (p == 2.0) return base * base;
                if (p == 3.0) return base * base * base;
            }
            return std::pow(base, eval(*n.b, t, x, u));
        }
        case Op::Neg: return -eval(*n.a, t, x, u);
        case Op::Sin: return std::sin(eval(*n.a, t, x, u));
        case Op::Cos: return std::cos(eval(*n.a, t, x, u));
        case Op::Exp: return std::exp(eval(*n.a, t, x, u));
        case Op::Ln: return std::log(eval(*n.a, t, x, u));
        case Op::Sqrt: return std::sqrt(eval(*n.a, t, x, u));
        case Op::Cosh: return std::cosh(eval(*n.a, t, x, u));
        case Op::Sinh: return std::sinh(eval(*n.a, t, x, u));
    }
    return 0.0;
}

bool depends(const Expr::Node& n, Expr::Var v) {
    if (n.op == Op::Var) return n.var == v;
    if (n.op == Op::Const) return false;
    return (n.a && depends(*n.a, v)) || (n.b && depends(*n.b, v));
}

NodePtr diff(const NodePtr& n, Expr::Var v) {
    if (!depends(*n, v)) return make_const(0.0);
    const NodePtr& a = n->a;
    const NodePtr& b = n->b;
    switch (n->op) {
        case Op::Const: return make_const(0.0);
        case Op::Var: return make_const(1.0);
        case Op::Add: return make(Op::Add, diff(a, v), diff(b, v));
        case Op::Sub: return make(Op::Sub, diff(a, v), diff(b, v));
        case Op::Mul:
            return make(Op::Add, make(Op::Mul, diff(a, v), b), make(Op::Mul, a, diff(b, v)));
        case Op::Div:
            return make(Op::Div,
                        make(Op::Sub, make(Op::Mul, diff(a, v), b), make(Op::Mul, a, diff(b, v))),
                        make(Op::Mul, b, b));
        case Op::Pow:
            if (!depends(*b, v)) {
                // d(a^p) = p a^(p-1) a'
                return make(Op::Mul, make(Op::Mul, b, make(Op::Pow, a, make(Op::Sub, b, make_const(1.0)))),
                            diff(a, v));
            }
            // d(a^b) = a^b (b' ln a + b a'/a)
            return make(Op::Mul, n,
                        make(Op::Add, make(Op::Mul, diff(b, v), make(Op::Ln, a)),
                             make(Op::Div, make(Op::Mul, b, diff(a, v)), a)));
        case Op::Neg: return make(Op::Neg, diff(a, v));
        case Op::Sin: return make(Op::Mul, make(Op::Cos, a), diff(a, v));
        case Op::Cos: return make(Op::Neg, make(Op::Mul, make(Op::Sin, a), diff(a, v)));
        case Op::Exp: return make(Op::Mul, n, diff(a, v));
        case Op::Ln: return make(Op::Div, diff(a, v), a);
        case Op::Sqrt: return make(Op::Div, diff(a, v), make(Op::Mul, make_const(2.0), n));
        case Op::Cosh: return make(Op::Mul, make(Op::Sinh, a), diff(a, v));
        case Op::Sinh: return make(Op::Mul, make(Op::Cosh, a), diff(a, v));
    }
    return make_const(0.0);
}

void print(const Expr::Node& n, std::ostream& os) {
    auto fn = [&](const char* name) {
        os << name << '(';
        print(*n.a, os);
        os << ')';
    };
    auto bin = [&](char c) {
        os << '(';
        print(*n.a, os);
        os << ' ' << c << ' ';
        print(*n.b, os);
        os << ')';
    };
    switch (n.op) {
        case Op::Const: os << n.value; break;
        case Op::Var: os << (n.var == Expr::Var::T ? 't' : (n.var == Expr::Var::X ? 'x' : 'u')); break;
        case Op::Add: bin('+'); break;
        case Op::Sub: bin('-'); break;
        case Op::Mul: bin('*'); break;
        case Op::Div: bin('/'); break;
        case Op::Pow: bin('^'); break;
        case Op::Neg: os << "-("; print(*n.a, os); os << ')'; break;
        case Op::Sin: fn("sin"); break;
        case Op::Cos: fn("cos"); break;
        case Op::Exp: fn("exp"); break;
        case Op::Ln: fn("ln"); break;
        case Op::Sqrt: fn("sqrt"); break;
        case Op::Cosh: fn("cosh"); break;
        case Op::Sinh: fn("sinh"); break;
    }
}

class Parser {
public:
    explicit Parser(std::string_view s) : s_(s) {}

    NodePtr parse() {
        NodePtr e = expr();
        skip();
        if (pos_ != s_.size()) error("unexpected '" + std::string(1, s_[pos_]) + "'");
        return e;
    }

private:
    std::string_view s_;
    std::size_t pos_ = 0;

    [[noreturn]] void error(const std::string& msg) const {
        fail(Errc::ConfigError, "expression \"" + std::string(s_) + "\" at column " + std::to_string(pos_ + 1) +
                                    ": " + msg);
    }

    void skip() {
        while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
    }

    bool accept(char c) {
        skip();
        if (pos_ < s_.size() && s_[pos_] == c) {
            ++pos_;
            return true;
        }
        return false;
    }

    NodePtr expr() {
        NodePtr lhs = term();
        for (;;) {
            if (accept('+')) lhs = make(Op::Add, lhs, term());
            else if (accept('-')) lhs = make(Op::Sub, lhs, term());
            else return lhs;
        }
    }

    NodePtr term() {
        NodePtr lhs = unary();
        for (;;) {
            if (accept('*')) lhs = make(Op::Mul, lhs, unary());
            else if (accept('/')) lhs = make(Op::Div, lhs, unary());
            else return lhs;
        }
    }

    NodePtr unary() {
        if (accept('-')) return make(Op::Neg, unary());
        if (accept('+')) return unary();
        return power();
    }

    NodePtr power() {
        NodePtr base = primary();
        if (accept('^')) return make(Op::Pow, base, unary());
        return base;
    }

    NodePtr primary() {
        skip();
        if (pos_ >= s_.size()) error("unexpected end of input");
        char c = s_[pos_];
        if (accept('(')) {
            NodePtr e = expr();
            if (!accept(')')) error("expected ')'");
            return e;
        }
        if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
            std::size_t start = pos_;
            while (pos_ < s_.size() && (std::isdigit(static_cast<unsigned char>(s_[pos_])) || s_[pos_] == '.')) ++pos_;
            if (pos_ < s_.size() && (s_[pos_] == 'e' || s_[pos_] == 'E')) {
                std::size_t save = pos_++;
                if (pos_ < s_.size() && (s_[pos_] == '+' || s_[pos_] == '-')) ++pos_;
                if (pos_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[pos_]))) {
                    while (pos_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[pos_]))) ++pos_;
                } else {
                    pos_ = save;
                }
            }
            std::string num(s_.substr(start, pos_ - start));
            try {
                std::size_t used = 0;
                double v = std::stod(num, &used);
                if (used != num.size()) error("bad number '" + num + "'");
                return make_const(v);
            } catch (const std::logic_error&) {
                error("bad number '" + num + "'");
            }
        }
        if (std::isalpha(static_cast<unsigned char>(c))) {
            std::size_t start = pos_;
            while (pos_ < s_.size() && std::isalnum(static_cast<unsigned char>(s_[pos_]))) ++pos_;
            std::string id(s_.substr(start, pos_ - start));
            if (id == "t") return make_var(Expr::Var::T);
            if (id == "x") return make_var(Expr::Var::X);
            if (id == "u") return make_var(Expr::Var::U);
            if (id == "pi") return make_const(std::numbers::pi);
            static const std::pair<const char*, Op> funcs[] = {{"sin", Op::Sin},   {"cos", Op::Cos},
                                                               {"exp", Op::Exp},   {"ln", Op::Ln},
                                                               {"sqrt", Op::Sqrt}, {"cosh", Op::Cosh},
                                                               {"sinh", Op::Sinh}};
            for (auto [name, op] : funcs) {
                if (id == name) {
                    if (!accept('(')) error("expected '(' after " + id);
                    NodePtr arg = expr();
                    if (!accept(')')) error("expected ')'");
                    return make(op, arg);
                }
            }
            error("unknown identifier '" + id + "'");
        }
        error("unexpected '" + std::string(1, c) + "'");
    }
};

}  // namespace

Expr::Expr() : root_(make_const(0.0)) {}
Expr::Expr(double c) : root_(make_const(c)) {}

Expr Expr::parse(std::string_view text) { return Expr(Parser(text).parse()); }

double Expr::operator()(double t, double x, double u) const { return eval(*root_, t, x, u); }

Expr Expr::derivative(Var v) const { return Expr(diff(root_, v)); }

bool Expr::depends_on(Var v) const { return depends(*root_, v); }

std::string Expr::to_string() const {
    std::ostringstream os;
    os.precision(17);
    print(*root_, os);
    return os.str();
}

}  // namespace ldexpand
