#pragma once

// Limited-memory quasi-Newton minimizer for smooth objectives on a box.
//
// Each iteration fixes the variables that sit on a bound with the gradient
// pushing outward, builds an L-BFGS direction on the remaining free
// variables, and runs a backtracking Armijo search along the projected path
// P(x + t d). Convergence is declared on the projected gradient
// |P(x - g) - x|_inf.

#include <Eigen/Core>

#include <functional>

namespace cafe {

struct BoxMinimizerOptions {
    int max_iterations = 100;
    double projected_gradient_tol = 1e-8;
    int memory = 10;
    int max_backtracks = 60;
    double armijo_c1 = 1e-4;
};

struct BoxMinimizerResult {
    Eigen::Vector4d x = Eigen::Vector4d::Zero();
    double value = 0.0;
    double projected_gradient_norm = 0.0;
    int iterations = 0;
    bool converged = false;
};

/// Returns f(x) and writes the gradient into `grad`.
using BoxObjective = std::function<double(const Eigen::Vector4d& x, Eigen::Vector4d& grad)>;

/// The start point is projected onto the box first. The returned value never
/// exceeds the objective at the projected start. Throws SolverError when the
/// objective or gradient is non-finite.
BoxMinimizerResult minimize_box(const BoxObjective& objective, const Eigen::Vector4d& start,
                                const Eigen::Vector4d& lower, const Eigen::Vector4d& upper,
                                const BoxMinimizerOptions& options = {});

double projected_gradient_norm(const Eigen::Vector4d& x, const Eigen::Vector4d& grad,
                               const Eigen::Vector4d& lower, const Eigen::Vector4d& upper);

}  // namespace cafe
