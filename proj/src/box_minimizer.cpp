#include "cafe/box_minimizer.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <vector>

#include "cafe/error.hpp"

namespace cafe {

namespace {

using Vec = Eigen::Vector4d;

Vec project(const Vec& x, const Vec& lower, const Vec& upper) {
    return x.cwiseMax(lower).cwiseMin(upper);
}

struct Pair {
    Vec s;
    Vec y;
    double rho;
};

double evaluate(const BoxObjective& f, const Vec& x, Vec& g) {
    const double v = f(x, g);
    if (!std::isfinite(v) || !g.allFinite()) {
        throw SolverError("non-finite objective or gradient during box minimization");
    }
    return v;
}

// Two-loop recursion restricted to the free variables.
Vec lbfgs_direction(const Vec& grad, const Vec& free_mask, const std::deque<Pair>& history) {
    Vec q = grad.cwiseProduct(free_mask);
    std::vector<double> alpha(history.size());
    for (std::size_t i = history.size(); i-- > 0;) {
        const auto& p = history[i];
        alpha[i] = p.rho * p.s.cwiseProduct(free_mask).dot(q);
        q -= alpha[i] * p.y.cwiseProduct(free_mask);
    }
    if (!history.empty()) {
        const auto& last = history.back();
        const Vec ym = last.y.cwiseProduct(free_mask);
        const double yy = ym.dot(ym);
        const double sy = last.s.cwiseProduct(free_mask).dot(ym);
        if (yy > 0.0 && sy > 0.0) q *= sy / yy;
    }
    for (std::size_t i = 0; i < history.size(); ++i) {
        const auto& p = history[i];
        const double beta = p.rho * p.y.cwiseProduct(free_mask).dot(q);
        q += (alpha[i] - beta) * p.s.cwiseProduct(free_mask);
    }
    return -q.cwiseProduct(free_mask);
}

}  // namespace

double projected_gradient_norm(const Vec& x, const Vec& grad, const Vec& lower, const Vec& upper) {
    return (project(x - grad, lower, upper) - x).lpNorm<Eigen::Infinity>();
}

BoxMinimizerResult minimize_box(const BoxObjective& objective, const Vec& start, const Vec& lower,
                                const Vec& upper, const BoxMinimizerOptions& options) {
    BoxMinimizerResult res;
    Vec x = project(start, lower, upper);
    Vec g;
    double f = evaluate(objective, x, g);
    std::deque<Pair> history;

    for (;;) {
        const double pg = projected_gradient_norm(x, g, lower, upper);
        res.projected_gradient_norm = pg;
        if (pg <= options.projected_gradient_tol) {
            res.converged = true;
            break;
        }
        if (res.iterations >= options.max_iterations) break;

        Vec free_mask = Vec::Ones();
        for (int i = 0; i < 4; ++i) {
            if ((x[i] <= lower[i] && g[i] > 0.0) || (x[i] >= upper[i] && g[i] < 0.0)) {
                free_mask[i] = 0.0;
            }
        }

        bool accepted = false;
        for (int attempt = 0; attempt < 2 && !accepted; ++attempt) {
            Vec d = lbfgs_direction(g, free_mask, history);
            if (!(d.dot(g) < 0.0)) {
                history.clear();
                d = -g.cwiseProduct(free_mask);
            }
            double t = 1.0;
            if (history.empty()) {
                const double dn = d.lpNorm<Eigen::Infinity>();
                if (dn > 0.0) t = std::min(1.0, 0.25 / dn);
            }
            for (int b = 0; b < options.max_backtracks; ++b, t *= 0.5) {
                const Vec trial = project(x + t * d, lower, upper);
                const Vec step = trial - x;
                if (step.lpNorm<Eigen::Infinity>() == 0.0) break;
                Vec g_new;
                const double f_new = evaluate(objective, trial, g_new);
                const double slack = 4.0 * std::numeric_limits<double>::epsilon() * std::abs(f);
                if (f_new <= f + options.armijo_c1 * g.dot(step) + slack && f_new <= f) {
                    const Vec y = g_new - g;
                    const double sy = step.dot(y);
                    if (sy > 1e-12 * y.squaredNorm()) {
                        history.push_back(Pair{step, y, 1.0 / sy});
                        if (static_cast<int>(history.size()) > options.memory) history.pop_front();
                    }
                    x = trial;
                    f = f_new;
                    g = g_new;
                    accepted = true;
                    break;
                }
            }
            if (!accepted) {
                if (history.empty()) break;
                history.clear();
            }
        }
        if (!accepted) {
            res.projected_gradient_norm = projected_gradient_norm(x, g, lower, upper);
            break;
        }
        ++res.iterations;
    }

    res.x = x;
    res.value = f;
    return res;
}

}  // namespace cafe
