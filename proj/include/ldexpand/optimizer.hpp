#pragma once

#include <functional>

#include <Eigen/Core>

namespace ldexpand {

/// Objective for maximization. Returns false when the point is infeasible
/// (infinite action); f and grad are then ignored.
using AscentObjective = std::function<bool(const Eigen::VectorXd& x, double& f, Eigen::VectorXd& grad)>;

struct LbfgsOptions {
    int memory = 10;
    int max_iterations = 5000;
    double grad_tol = 1e-10;  // on max |grad_i|
    double rel_f_tol = 1e-15;
    int max_backtracks = 60;
};

struct LbfgsResult {
    Eigen::VectorXd x;
    double f = 0.0;
    double grad_norm = 0.0;
    int iterations = 0;
    bool converged = false;
    bool feasible = false;
};

/// Limited-memory BFGS ascent with Armijo backtracking; infeasible trial
/// points are treated as -infinity and shrink the step.
LbfgsResult lbfgs_maximize(const AscentObjective& obj, Eigen::VectorXd x0, const LbfgsOptions& opt = {});

}  // namespace ldexpand
