#include "swg/optim.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>

namespace swg {

namespace {

double dot(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

double max_norm(std::span<const double> a) {
    double m = 0.0;
    for (double v : a) m = std::max(m, std::fabs(v));
    return m;
}

}  // namespace

LbfgsResult lbfgs_minimize(const ObjectiveFn& fn, std::vector<double> x0,
                           const LbfgsOptions& opts) {
    const size_t n = x0.size();
    LbfgsResult res;
    res.x = x0;

    std::vector<double> x = std::move(x0);
    std::vector<double> g(n, 0.0), g_new(n, 0.0), x_new(n, 0.0), dir(n, 0.0);
    std::vector<double> x_lo(n, 0.0), g_lo(n, 0.0);
    double f = fn(x, g);
    res.n_evals = 1;
    if (!std::isfinite(f))
        throw InvalidParameterError("lbfgs_minimize: starting point is infeasible");
    res.fx = f;
    res.x = x;

    struct Pair {
        std::vector<double> s, y;
        double rho;
    };
    std::deque<Pair> mem;

    while (res.n_evals < opts.max_evals) {
        if (max_norm(g) <= opts.grad_tol) {
            res.converged = true;
            break;
        }

        // Two-loop recursion for dir = -H * g.
        for (size_t i = 0; i < n; ++i) dir[i] = -g[i];
        std::vector<double> alpha(mem.size());
        for (size_t mi = mem.size(); mi-- > 0;) {
            const Pair& p = mem[mi];
            alpha[mi] = p.rho * dot(p.s, dir);
            for (size_t i = 0; i < n; ++i) dir[i] -= alpha[mi] * p.y[i];
        }
        if (!mem.empty()) {
            const Pair& last = mem.back();
            const double yy = dot(last.y, last.y);
            if (yy > 0.0) {
                const double scale = 1.0 / (last.rho * yy);
                for (size_t i = 0; i < n; ++i) dir[i] *= scale;
            }
        }
        for (size_t mi = 0; mi < mem.size(); ++mi) {
            const Pair& p = mem[mi];
            const double beta = p.rho * dot(p.y, dir);
            const double corr = alpha[mi] - beta;
            for (size_t i = 0; i < n; ++i) dir[i] += corr * p.s[i];
        }

        double gd = dot(g, dir);
        if (!(gd < 0.0)) {
            // Not a descent direction (stale curvature); fall back.
            for (size_t i = 0; i < n; ++i) dir[i] = -g[i];
            gd = -dot(g, g);
            mem.clear();
            if (!(gd < 0.0)) break;
        }

        // Weak Wolfe line search by bisection with expansion. The curvature
        // condition keeps s'y positive so the quasi-Newton memory stays fresh;
        // plain backtracking stalls in curved valleys once updates get skipped.
        const double c1 = 1e-4, c2 = 0.9;
        double lo = 0.0;
        double hi = std::numeric_limits<double>::infinity();
        double step = 1.0;
        bool accepted = false;
        bool have_lo = false;
        double f_new = f, f_lo = f;
        while (res.n_evals < opts.max_evals) {
            for (size_t i = 0; i < n; ++i) x_new[i] = x[i] + step * dir[i];
            f_new = fn(x_new, g_new);
            ++res.n_evals;
            if (std::isfinite(f_new) && f_new < res.fx) {
                res.fx = f_new;
                res.x = x_new;
            }
            if (!std::isfinite(f_new) || f_new > f + c1 * step * gd) {
                hi = step;
            } else if (dot(g_new, dir) < c2 * gd) {
                lo = step;
                have_lo = true;
                x_lo = x_new;
                g_lo = g_new;
                f_lo = f_new;
            } else {
                accepted = true;
                break;
            }
            if (std::isfinite(hi)) {
                if ((hi - lo) * max_norm(dir) < opts.step_tol) break;
                step = 0.5 * (lo + hi);
            } else {
                step *= 2.0;
            }
        }
        if (!accepted) {
            // Settle for the best point that passed the decrease condition.
            if (!have_lo) break;
            x_new = x_lo;
            g_new = g_lo;
            f_new = f_lo;
        }

        Pair p;
        p.s.resize(n);
        p.y.resize(n);
        double sy = 0.0;
        for (size_t i = 0; i < n; ++i) {
            p.s[i] = x_new[i] - x[i];
            p.y[i] = g_new[i] - g[i];
            sy += p.s[i] * p.y[i];
        }
        if (sy > 1e-12) {
            p.rho = 1.0 / sy;
            mem.push_back(std::move(p));
            if (static_cast<int>(mem.size()) > opts.history) mem.pop_front();
        } else if (sy < 0.0) {
            // Negative curvature along the accepted step: the stored pairs no
            // longer describe the local surface, so drop them.
            mem.clear();
        }
        x.swap(x_new);
        g.swap(g_new);
        f = f_new;
    }
    if (max_norm(g) <= opts.grad_tol) res.converged = true;
    return res;
}

}  // namespace swg
