#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

namespace cavityq {

// Objective to maximize. When grad is non-null it must be filled with the
// gradient (same length as x).
using Objective = std::function<double(std::span<const double> x, std::vector<double>* grad)>;

enum class SearchDirection {
    Steepest,
    ConjugateGradient,  // Polak-Ribiere+
    Lbfgs,              // limited-memory quasi-Newton scaling of the gradient
};

struct OptimizeOptions {
    std::size_t max_iterations = 500;
    double target = 1.0;        // stop once the value reaches this
    double initial_step = 1e-2; // first step along the raw gradient
    double grow = 2.0;          // expansion factor after a successful step
    double shrink = 0.5;
    int max_expansions = 60;
    double min_step = 1e-16;
    SearchDirection direction = SearchDirection::Lbfgs;
    std::size_t memory = 10;    // L-BFGS history length
};

struct OptimizeTraceRow {
    std::size_t iteration = 0;
    double value = 0.0;
    double step = 0.0;
};

struct OptimizeResult {
    std::vector<double> x;
    double value = 0.0;
    std::vector<OptimizeTraceRow> trace;  // row 0 is the starting point
    bool converged = false;
    std::size_t iterations = 0;
};

// Gradient ascent with a backtracking / expanding line search. Only strict
// improvements are accepted, so the traced values never decrease.
OptimizeResult maximize(const Objective& f, std::vector<double> x0, const OptimizeOptions& options = {});

} // namespace cavityq
