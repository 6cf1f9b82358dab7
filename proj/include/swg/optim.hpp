#pragma once

#include <functional>
#include <span>
#include <vector>

#include "swg/common.hpp"

namespace swg {

// Objective callback: fill grad (same length as x) and return f(x). A
// non-finite return value marks x as infeasible and makes the line search
// back off.
using ObjectiveFn = std::function<double(std::span<const double> x, std::span<double> grad)>;

struct LbfgsOptions {
    int max_evals = 60;       // hard cap on objective evaluations
    int history = 8;          // stored correction pairs
    double grad_tol = 1e-7;   // stop when the max-norm of the gradient drops below
    double step_tol = 1e-14;  // stop when the line search cannot move
};

struct LbfgsResult {
    std::vector<double> x;  // best point seen
    double fx = 0.0;        // objective at x
    int n_evals = 0;
    bool converged = false;  // gradient tolerance reached
};

// Limited-memory BFGS minimization with Armijo backtracking. Always returns
// the best point evaluated, so the result is never worse than the starting
// point; that property is what the fitting loop relies on.
LbfgsResult lbfgs_minimize(const ObjectiveFn& fn, std::vector<double> x0,
                           const LbfgsOptions& opts = {});

}  // namespace swg
