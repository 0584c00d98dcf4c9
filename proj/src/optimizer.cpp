#include "ldexpand/optimizer.hpp"

#include <cmath>
#include <deque>

namespace ldexpand {

LbfgsResult lbfgs_maximize(const AscentObjective& obj, Eigen::VectorXd x0, const LbfgsOptions& opt) {
    LbfgsResult res;
    const Eigen::Index n = x0.size();
    Eigen::VectorXd g(n), gn(n), xn(n);
    double f = 0.0, fn = 0.0;
    res.x = x0;
    if (!obj(x0, f, g)) return res;
    res.feasible = true;

    // work with minimization of -f
    Eigen::VectorXd x = std::move(x0);
    Eigen::VectorXd grad = -g;
    double val = -f;
    std::deque<Eigen::VectorXd> S, Y;
    std::deque<double> rho;

    for (int it = 0; it < opt.max_iterations; ++it) {
        res.iterations = it;
        const double gmax = grad.cwiseAbs().maxCoeff();
        if (gmax <= opt.grad_tol) {
            res.converged = true;
            break;
        }
        // two-loop recursion
        Eigen::VectorXd q = grad;
        std::vector<double> alpha(S.size());
        for (int i = static_cast<int>(S.size()) - 1; i >= 0; --i) {
            alpha[i] = rho[i] * S[i].dot(q);
            q -= alpha[i] * Y[i];
        }
        double gamma = S.empty() ? 1.0 / std::max(1.0, grad.norm()) : S.back().dot(Y.back()) / Y.back().squaredNorm();
        Eigen::VectorXd d = gamma * q;
        for (std::size_t i = 0; i < S.size(); ++i) {
            const double beta = rho[i] * Y[i].dot(d);
            d += S[i] * (alpha[i] - beta);
        }
        d = -d;
        double slope = grad.dot(d);
        if (slope >= 0.0) {
            // lost descent; restart from steepest descent
            S.clear();
            Y.clear();
            rho.clear();
            d = -grad / std::max(1.0, grad.norm());
            slope = grad.dot(d);
        }

        double step = 1.0;
        bool accepted = false;
        for (int b = 0; b < opt.max_backtracks; ++b) {
            xn = x + step * d;
            double fv = 0.0;
            if (obj(xn, fv, gn) && std::isfinite(fv)) {
                fn = -fv;
                if (fn <= val + 1e-4 * step * slope) {
                    accepted = true;
                    break;
                }
            }
            step *= 0.5;
        }
        if (!accepted) break;
        gn = -gn;
        Eigen::VectorXd s = xn - x, y = gn - grad;
        const double sy = s.dot(y);
        if (sy > 1e-300) {
            S.push_back(std::move(s));
            Y.push_back(std::move(y));
            rho.push_back(1.0 / sy);
            if (static_cast<int>(S.size()) > opt.memory) {
                S.pop_front();
                Y.pop_front();
                rho.pop_front();
            }
        }
        const double df = val - fn;
        x = xn;
        grad = gn;
        val = fn;
        if (df <= opt.rel_f_tol * std::max(1.0, std::abs(val)) && grad.cwiseAbs().maxCoeff() <= 1e3 * opt.grad_tol) {
            res.converged = true;
            break;
        }
    }
    res.x = x;
    res.f = -val;
    res.grad_norm = grad.cwiseAbs().maxCoeff();
    return res;
}

}  // namespace ldexpand
