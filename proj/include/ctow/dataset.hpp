#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "ctow/matrix.hpp"

namespace ctow {

// Feature matrix with optional per-row class labels. Immutable after
// construction; shared freely across concurrent learner training.
struct Dataset {
    static constexpr int kNoLabel = -1;

    Matrix features;
    std::vector<int> labels;  // kNoLabel where absent
    int class_count = 0;
    std::vector<std::string> feature_names;
    std::vector<std::string> label_names;  // original label text, by class index

    int n() const { return static_cast<int>(features.rows()); }
    int dim() const { return static_cast<int>(features.cols()); }
    bool has_label(int row) const { return labels[static_cast<std::size_t>(row)] != kNoLabel; }
    bool fully_labeled() const;
};

// Validates the invariants above (finite features, labels within range).
void validate_dataset(const Dataset& ds);

// CSV: UTF-8, comma separated, header row, decimal-point numbers. Rows with
// an empty label cell become unlabeled. Label values are remapped to dense
// class indices by first appearance.
Dataset load_csv(const std::string& path, const std::optional<std::string>& label_column);

struct SplitPlan {
    std::vector<int> labeled_ids;
    std::vector<int> unlabeled_ids;
    std::vector<int> test_ids;
    double label_rate = 0.0;
    std::uint64_t seed = 0;
};

// Stratified k-fold split: fold `fold_index` becomes the test set, remaining
// rows are labeled/unlabeled per class at rate `label_rate` (ceil, min 1).
// Deterministic for a fixed seed.
SplitPlan stratified_split(const Dataset& ds, double label_rate, int folds, int fold_index,
                           std::uint64_t seed);

} // namespace ctow
