#pragma once

#include <cstdint>
#include <vector>

#include "ctow/matrix.hpp"

namespace ctow {

struct TsvmConfig {
    double c_labeled = 1.0;
    double c_unlabeled = 1.0;
    double temperature = 1.0;
    int max_outer = 20;  // cap on penalty-ramp levels
    int epochs = 500;    // subgradient epochs per (re)train
    std::uint64_t seed = 0;
};

struct LinearBinary {
    std::vector<double> w;
    double b = 0.0;

    bool operator==(const LinearBinary&) const = default;
};

// One accepted batch of pseudo-label pair swaps, with the transductive
// objective evaluated at fixed (w, b) immediately before and after.
struct SwitchEvent {
    int cls = 0;
    double c_u_eff = 0.0;
    double objective_before = 0.0;
    double objective_after = 0.0;
    int positive_count = 0;  // unlabeled positives after the batch
    int positive_target = 0; // labeled positive fraction scaled to u
};

// Linear one-vs-rest transductive SVM. Weights and biases live in the
// original feature space; margin_density is the fraction of labeled rows
// whose own-class hinge slack is positive.
struct TsvmModel {
    std::vector<LinearBinary> per_class;
    double c_labeled = 1.0;
    double c_unlabeled = 1.0;
    double temperature = 1.0;
    double margin_density = 0.0;
    int class_count = 0;
    int feature_count = 0;
    std::vector<SwitchEvent> trace;  // diagnostics, not serialized

    bool operator==(const TsvmModel& o) const {
        return per_class == o.per_class && c_labeled == o.c_labeled &&
               c_unlabeled == o.c_unlabeled && temperature == o.temperature &&
               margin_density == o.margin_density && class_count == o.class_count &&
               feature_count == o.feature_count;
    }
};

// Label-switching training: supervised warm start, balanced pseudo labels,
// penalty ramp doubling up to c_unlabeled, improving pair swaps until stable.
// With no unlabeled rows this degrades to the plain supervised SVM.
TsvmModel train_tsvm(const Matrix& labeled, const std::vector<int>& labels, int class_count,
                     const Matrix& unlabeled, const TsvmConfig& config);

// Fraction of labeled rows with positive slack in their own class-vs-rest
// subproblem (slack > 1e-9 counts as inside the margin).
double margin_density(const TsvmModel& model, const Matrix& labeled, const std::vector<int>& labels);

// Softmax over the per-class decision values divided by the temperature.
ProbMatrix predict_proba_tsvm(const TsvmModel& model, const Matrix& rows);

// Per-class decision values w_c . x + b_c.
Matrix decision_values_tsvm(const TsvmModel& model, const Matrix& rows);

} // namespace ctow
