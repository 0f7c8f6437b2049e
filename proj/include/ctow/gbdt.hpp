#pragma once

#include <cstdint>
#include <vector>

#include "ctow/matrix.hpp"

namespace ctow {

struct GbdtConfig {
    int rounds = 50;
    int max_depth = 3;
    double learning_rate = 0.3;
    double l2_reg = 1.0;
    double min_child_weight = 1.0;

    bool operator==(const GbdtConfig&) const = default;
};

// Regression tree node: internal nodes route x left iff x[feature] < threshold.
// feature < 0 marks a leaf.
struct TreeNode {
    int feature = -1;
    double threshold = 0.0;
    int left = -1;
    int right = -1;
    double weight = 0.0;

    bool is_leaf() const { return feature < 0; }
};

using Tree = std::vector<TreeNode>;  // node 0 is the root

// One-vs-all boosted trees with a shared softmax: trees[c][d] is the d-th
// round's tree for class c. Leaf weights already include the learning rate.
struct GbdtModel {
    GbdtConfig config;
    int class_count = 0;
    int feature_count = 0;
    std::vector<std::vector<Tree>> trees;
    bool degenerate = false;  // trained on a single-class sample
    int degenerate_class = 0;
    std::vector<double> train_loss;  // mean softmax loss: initial, then after each round

    bool operator==(const GbdtModel&) const = default;
};

inline bool operator==(const TreeNode& a, const TreeNode& b) {
    return a.feature == b.feature && a.threshold == b.threshold && a.left == b.left &&
           a.right == b.right && a.weight == b.weight;
}

// Second-order boosting on softmax cross-entropy: g = p - 1{y=c},
// h = p (1 - p); exact greedy splits over sorted unique feature values;
// leaf weight -lr * G / (H + lambda). Deterministic for fixed inputs.
GbdtModel train_gbdt(const Matrix& features, const std::vector<int>& labels, int class_count,
                     const GbdtConfig& config, std::uint64_t seed);

// Raw per-class ensemble scores (sum of tree outputs).
Matrix predict_raw_gbdt(const GbdtModel& model, const Matrix& rows);

// Softmax over the raw scores; rows sum to 1, entries strictly inside (0, 1).
ProbMatrix predict_proba_gbdt(const GbdtModel& model, const Matrix& rows);

} // namespace ctow
