#pragma once

#include <optional>
#include <span>
#include <vector>

#include "ctow/matrix.hpp"

namespace ctow {

// Ensemble weights on the probability simplex. The last coordinate may be
// pinned to a fixed value (the margin-density prior of the TSVM learner).
struct WeightVector {
    std::vector<double> w;
    std::optional<double> fixed_last;
};

// Throws if w is off the simplex (tolerance 1e-9) or the pin is violated.
void check_weight_vector(const WeightVector& wv);

struct SolverConfig {
    double mu = 0.5;
    int iterations = 10;
    double step0 = 1.0;
    double epsilon_clip = 1e-12;  // probability floor inside the log
};

// Sigmoid-shaped prior for the TSVM weight: 1 / (1 + 3 e^{10 (xi_hat - alpha)}).
// Strictly decreasing in xi_hat, range within (0, 1).
double prior_weight(double xi_hat, double alpha);

// Convex combination of the K probability matrices.
ProbMatrix ensemble_proba(const std::vector<ProbMatrix>& ps, std::span<const double> w);

// Mean prediction entropy plus mu * ||w||^2. Natural log; probabilities are
// floored at epsilon_clip inside the log, so one-hot rows contribute zero.
double objective(const std::vector<ProbMatrix>& ps, std::span<const double> w, double mu,
                 double epsilon_clip);

// d objective / d w_k = (1/u) sum_ij -(1 + ln max(phat_ij, eps)) p_k[i,j] + 2 mu w_k.
std::vector<double> gradient(const std::vector<ProbMatrix>& ps, std::span<const double> w,
                             double mu, double epsilon_clip);

// Euclidean projection onto {v >= 0, sum v = total} by sort and threshold.
std::vector<double> project_simplex(std::span<const double> x, double total);

// Projected gradient with backtracking on the step size. Free coordinates
// start uniform; returns the iterate with the lowest objective seen.
WeightVector solve_weights(const std::vector<ProbMatrix>& ps, std::optional<double> fixed_last,
                           const SolverConfig& config);

} // namespace ctow
