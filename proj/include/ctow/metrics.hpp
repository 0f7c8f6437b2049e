#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ctow/cotrain.hpp"
#include "ctow/dataset.hpp"

namespace ctow {

double accuracy(std::span<const int> predicted, std::span<const int> truth);

// Correct/incorrect cross-classification of a pair of classifiers against
// the truth: n11 both correct, n01 only the first (a) correct, n10 only the
// second (b) correct, n00 neither.
struct ContingencyTable {
    long long n11 = 0;
    long long n10 = 0;
    long long n01 = 0;
    long long n00 = 0;
};

ContingencyTable contingency(std::span<const int> pred_a, std::span<const int> pred_b,
                             std::span<const int> truth);

// Correlation of correctness outcomes; nullopt when a marginal is zero and
// the formula divides by zero.
std::optional<double> rho(const ContingencyTable& table);

enum class Method { Ctow, CtowNp, CtowNt, GbdtOnly, TsvmOnly };

std::string method_name(Method m);
std::optional<Method> parse_method(const std::string& name);

// use_prior / use_tsvm toggles implied by the method.
CotrainConfig apply_method(CotrainConfig config, Method method);

struct FoldResult {
    int fold = 0;
    double accuracy = 0.0;
    std::vector<RoundRecord> history;
};

struct CvReport {
    Method method = Method::Ctow;
    double label_rate = 0.0;
    int folds = 0;
    CotrainConfig config;
    std::vector<FoldResult> fold_results;
    double mean_accuracy = 0.0;
    double std_accuracy = 0.0;  // population standard deviation over folds
    double wall_time_seconds = 0.0;
};

// Per fold: stratified split, train per the method, score on the held-out
// fold with the hidden truth.
CvReport cross_validate(const Dataset& ds, const CotrainConfig& config, int folds,
                        double label_rate, Method method = Method::Ctow);

} // namespace ctow
