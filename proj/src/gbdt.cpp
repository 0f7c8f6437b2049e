#include "ctow/gbdt.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "ctow/errors.hpp"

namespace ctow {

namespace {

constexpr double kMinSplitGain = 1e-12;
constexpr double kDegenerateScore = 40.0;  // softmax(40 vs 0) is 1 within 4e-18

void softmax_rows(Matrix& scores) {
    for (std::size_t i = 0; i < scores.rows(); ++i) {
        auto row = scores.row(i);
        double mx = *std::max_element(row.begin(), row.end());
        double sum = 0.0;
        for (double& v : row) {
            v = std::exp(v - mx);
            sum += v;
        }
        for (double& v : row) v /= sum;
    }
}

struct SplitCandidate {
    double gain = 0.0;
    int feature = -1;
    double threshold = 0.0;
};

double leaf_score(double g, double h, double lambda) { return 0.5 * g * g / (h + lambda); }

class TreeBuilder {
public:
    TreeBuilder(const Matrix& x, const std::vector<std::vector<int>>& sorted_idx,
                const GbdtConfig& cfg)
        : x_(x), sorted_idx_(sorted_idx), cfg_(cfg) {}

    Tree build(const std::vector<double>& grad, const std::vector<double>& hess) {
        const std::size_t n = x_.rows();
        grad_ = &grad;
        hess_ = &hess;
        node_of_row_.assign(n, 0);
        Tree tree;
        double g_total = std::accumulate(grad.begin(), grad.end(), 0.0);
        double h_total = std::accumulate(hess.begin(), hess.end(), 0.0);
        tree.push_back(TreeNode{});
        grow(tree, 0, 0, g_total, h_total, static_cast<int>(n));
        return tree;
    }

private:
    void grow(Tree& tree, int node, int depth, double g_sum, double h_sum, int row_count) {
        SplitCandidate best;
        if (depth < cfg_.max_depth && row_count >= 2) best = find_split(node, g_sum, h_sum);
        if (best.feature < 0) {
            tree[static_cast<std::size_t>(node)].weight =
                -cfg_.learning_rate * g_sum / (h_sum + cfg_.l2_reg);
            return;
        }
        int left = static_cast<int>(tree.size());
        tree.push_back(TreeNode{});
        int right = static_cast<int>(tree.size());
        tree.push_back(TreeNode{});
        tree[static_cast<std::size_t>(node)].feature = best.feature;
        tree[static_cast<std::size_t>(node)].threshold = best.threshold;
        tree[static_cast<std::size_t>(node)].left = left;
        tree[static_cast<std::size_t>(node)].right = right;

        double gl = 0.0, hl = 0.0;
        int nl = 0;
        for (std::size_t i = 0; i < node_of_row_.size(); ++i) {
            if (node_of_row_[i] != node) continue;
            if (x_(i, static_cast<std::size_t>(best.feature)) < best.threshold) {
                node_of_row_[i] = left;
                gl += (*grad_)[i];
                hl += (*hess_)[i];
                ++nl;
            } else {
                node_of_row_[i] = right;
            }
        }
        grow(tree, left, depth + 1, gl, hl, nl);
        grow(tree, right, depth + 1, g_sum - gl, h_sum - hl, row_count - nl);
    }

    SplitCandidate find_split(int node, double g_sum, double h_sum) {
        SplitCandidate best;
        const double parent = leaf_score(g_sum, h_sum, cfg_.l2_reg);
        for (std::size_t f = 0; f < x_.cols(); ++f) {
            double gl = 0.0, hl = 0.0;
            bool have_left = false;
            double prev_value = 0.0;
            for (int row : sorted_idx_[f]) {
                if (node_of_row_[static_cast<std::size_t>(row)] != node) continue;
                double value = x_(static_cast<std::size_t>(row), f);
                if (have_left && value > prev_value) {
                    // candidate threshold: rows with x[f] < value go left
                    double gr = g_sum - gl;
                    double hr = h_sum - hl;
                    if (hl >= cfg_.min_child_weight && hr >= cfg_.min_child_weight) {
                        double gain = leaf_score(gl, hl, cfg_.l2_reg) +
                                      leaf_score(gr, hr, cfg_.l2_reg) - parent;
                        if (gain > best.gain + kMinSplitGain) {
                            best.gain = gain;
                            best.feature = static_cast<int>(f);
                            best.threshold = value;
                        }
                    }
                }
                gl += (*grad_)[static_cast<std::size_t>(row)];
                hl += (*hess_)[static_cast<std::size_t>(row)];
                prev_value = value;
                have_left = true;
            }
        }
        return best;
    }

    const Matrix& x_;
    const std::vector<std::vector<int>>& sorted_idx_;
    const GbdtConfig& cfg_;
    const std::vector<double>* grad_ = nullptr;
    const std::vector<double>* hess_ = nullptr;
    std::vector<int> node_of_row_;
};

double tree_value(const Tree& tree, std::span<const double> x) {
    int node = 0;
    while (!tree[static_cast<std::size_t>(node)].is_leaf()) {
        const TreeNode& nd = tree[static_cast<std::size_t>(node)];
        node = x[static_cast<std::size_t>(nd.feature)] < nd.threshold ? nd.left : nd.right;
    }
    return tree[static_cast<std::size_t>(node)].weight;
}

double mean_softmax_loss(const Matrix& probs, const std::vector<int>& labels) {
    double loss = 0.0;
    for (std::size_t i = 0; i < probs.rows(); ++i)
        loss -= std::log(std::max(probs(i, static_cast<std::size_t>(labels[i])), 1e-300));
    return loss / static_cast<double>(probs.rows());
}

} // namespace

GbdtModel train_gbdt(const Matrix& features, const std::vector<int>& labels, int class_count,
                     const GbdtConfig& config, std::uint64_t /*seed*/) {
    const std::size_t n = features.rows();
    if (n == 0) throw EmptyDataset("train_gbdt: no rows");
    if (labels.size() != n) throw LengthMismatch("train_gbdt: label count does not match rows");
    if (class_count < 2) throw std::invalid_argument("train_gbdt: class_count must be >= 2");
    if (config.rounds < 1) throw std::invalid_argument("train_gbdt: rounds must be >= 1");
    for (int y : labels)
        if (y < 0 || y >= class_count) throw std::invalid_argument("train_gbdt: label out of range");

    GbdtModel model;
    model.config = config;
    model.class_count = class_count;
    model.feature_count = static_cast<int>(features.cols());
    model.trees.resize(static_cast<std::size_t>(class_count));

    // single class present: constant-probability model, flagged
    const bool single_class = std::all_of(labels.begin(), labels.end(),
                                          [&](int y) { return y == labels[0]; });
    if (single_class) {
        model.degenerate = true;
        model.degenerate_class = labels[0];
        return model;
    }

    std::vector<std::vector<int>> sorted_idx(features.cols());
    for (std::size_t f = 0; f < features.cols(); ++f) {
        auto& idx = sorted_idx[f];
        idx.resize(n);
        std::iota(idx.begin(), idx.end(), 0);
        std::stable_sort(idx.begin(), idx.end(), [&](int a, int b) {
            return features(static_cast<std::size_t>(a), f) < features(static_cast<std::size_t>(b), f);
        });
    }

    Matrix scores(n, static_cast<std::size_t>(class_count), 0.0);
    TreeBuilder builder(features, sorted_idx, config);
    std::vector<double> grad(n), hess(n);

    Matrix probs = scores;
    softmax_rows(probs);
    model.train_loss.push_back(mean_softmax_loss(probs, labels));

    for (int round = 0; round < config.rounds; ++round) {
        probs = scores;
        softmax_rows(probs);
        for (int c = 0; c < class_count; ++c) {
            for (std::size_t i = 0; i < n; ++i) {
                double p = probs(i, static_cast<std::size_t>(c));
                grad[i] = p - (labels[i] == c ? 1.0 : 0.0);
                hess[i] = p * (1.0 - p);
            }
            Tree tree = builder.build(grad, hess);
            for (std::size_t i = 0; i < n; ++i)
                scores(i, static_cast<std::size_t>(c)) += tree_value(tree, features.row(i));
            model.trees[static_cast<std::size_t>(c)].push_back(std::move(tree));
        }
        probs = scores;
        softmax_rows(probs);
        model.train_loss.push_back(mean_softmax_loss(probs, labels));
    }
    return model;
}

Matrix predict_raw_gbdt(const GbdtModel& model, const Matrix& rows) {
    if (static_cast<int>(rows.cols()) != model.feature_count)
        throw DimensionMismatch("predict_proba_gbdt: feature count mismatch");
    Matrix scores(rows.rows(), static_cast<std::size_t>(model.class_count), 0.0);
    if (model.degenerate) {
        for (std::size_t i = 0; i < rows.rows(); ++i)
            scores(i, static_cast<std::size_t>(model.degenerate_class)) = kDegenerateScore;
        return scores;
    }
    for (int c = 0; c < model.class_count; ++c) {
        for (const Tree& tree : model.trees[static_cast<std::size_t>(c)]) {
            for (std::size_t i = 0; i < rows.rows(); ++i)
                scores(i, static_cast<std::size_t>(c)) += tree_value(tree, rows.row(i));
        }
    }
    return scores;
}

ProbMatrix predict_proba_gbdt(const GbdtModel& model, const Matrix& rows) {
    Matrix scores = predict_raw_gbdt(model, rows);
    softmax_rows(scores);
    return scores;
}

} // namespace ctow
