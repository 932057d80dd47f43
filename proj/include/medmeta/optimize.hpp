#pragma once

#include <functional>
#include <span>
#include <vector>

namespace medmeta {

struct Box {
    std::vector<double> lower;
    std::vector<double> upper;
};

struct MinimizeOptions {
    // Stop when (f_k - f_{k+1}) <= rel_tol * max(|f_k|, |f_{k+1}|).
    double rel_tol = 1e-8;
    int max_iterations = 500;
    // Central-difference step, relative to max(|x_i|, 1).
    double fd_step = 1e-6;
};

struct MinimizeResult {
    std::vector<double> x;
    double value = 0.0;
    int iterations = 0;
    int evaluations = 0;
    bool converged = false;
};

using Objective = std::function<double(std::span<const double>)>;

// Projected BFGS over a box with finite-difference gradients. Non-finite
// objective values are treated as +infinity by the line search. A value of
// exactly zero is taken as a global minimum and stops the search.
MinimizeResult minimize_box(const Objective& f, std::vector<double> start, const Box& box,
                            const MinimizeOptions& options = {});

} // namespace medmeta
