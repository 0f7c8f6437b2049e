#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "ctow/dataset.hpp"
#include "ctow/gbdt.hpp"
#include "ctow/matrix.hpp"
#include "ctow/random.hpp"
#include "ctow/tsvm.hpp"
#include "ctow/weights.hpp"

namespace ctow {

struct CotrainConfig {
    int k_learners = 4;              // K-1 boosted-tree learners + 1 TSVM
    double beta = 0.75;              // pseudo-label confidence threshold
    double alpha = 0.2;              // margin-density threshold of the prior
    double mu = 0.5;                 // weight-solver regularization
    int t_inner = 10;                // weight-solver iterations per round
    double bootstrap_fraction = 0.8; // |I_k| = floor(0.8 u) candidate rows
    int max_rounds = 20;
    std::uint64_t seed = 0;
    bool use_prior = true;           // pin the TSVM weight to the prior
    bool use_tsvm = true;            // otherwise a fourth bootstrapped GBDT
    bool normalize_loo = false;      // rescale leave-one-out rows to sum 1
    GbdtConfig gbdt;
    TsvmConfig tsvm;
};

struct PseudoEntry {
    int row = 0;  // index into the unlabeled set
    int label = 0;
    double confidence = 0.0;

    bool operator==(const PseudoEntry&) const = default;
};

struct PseudoBatch {
    int learner = 0;
    std::vector<PseudoEntry> entries;

    bool operator==(const PseudoBatch&) const = default;
};

// One co-training round. batch_sizes has one entry per retrainable learner
// (the K-1 tree learners; K of them when use_tsvm is off).
struct RoundRecord {
    int round = 0;  // 1-based
    std::vector<double> weights;
    std::optional<double> margin_density;
    double objective = 0.0;
    std::vector<int> batch_sizes;
};

struct CotrainModel {
    CotrainConfig config;
    std::vector<GbdtModel> gbdts;
    std::optional<TsvmModel> tsvm;
    WeightVector weights;
    int rounds_run = 0;
    std::vector<RoundRecord> history;
    int class_count = 0;
    int feature_count = 0;
};

struct Initialized {
    std::vector<GbdtModel> gbdts;
    std::optional<TsvmModel> tsvm;
    std::vector<ProbMatrix> probs;  // per learner, over the unlabeled rows
    std::vector<std::vector<int>> bootstrap_rows;  // per tree learner, into L
};

// |labels|-sized draw with replacement containing every class seen in labels:
// up to 100 free attempts, then one reserved slot per class.
std::vector<int> bootstrap_sample(const std::vector<int>& labels, Rng& rng);

// Trains the K-1 tree learners on |L|-sized bootstraps (every class present;
// resample up to 100 times, then force-include) and the TSVM on L with U as
// its unlabeled pool. With use_tsvm off the last slot is a fourth bootstrap
// GBDT. probs[k] holds learner k's predictions over all unlabeled rows.
Initialized initialize(const Dataset& ds, const SplitPlan& split, const CotrainConfig& config);

// Weighted sum of every matrix except ps[k], restricted to `subset` rows:
// rows sum to 1 - w_k. With normalize on, rows are rescaled to sum 1.
ProbMatrix leave_one_out_proba(const std::vector<ProbMatrix>& ps, const WeightVector& w, int k,
                               std::span<const int> subset, bool normalize = false);

// Rows of pbar whose max entry reaches beta; label = argmax (ties toward the
// lower class), confidence = the max. subset maps pbar rows back to U.
PseudoBatch select_pseudo(const ProbMatrix& pbar, std::span<const int> subset, double beta,
                          int learner);

// Full loop: per round solve the ensemble weights on the current unlabeled
// predictions (TSVM weight pinned to prior_weight(margin density, alpha) when
// use_prior and use_tsvm), draw each tree learner's candidate subset, select
// its pseudo batch from the leave-one-out ensemble, and retrain it on its own
// bootstrap plus the batch. The TSVM is never retrained. Stops when every
// batch (rows and labels) repeats the previous round's, or at max_rounds.
CotrainModel run_cotraining(const Dataset& ds, const SplitPlan& split,
                            const CotrainConfig& config);

// Final ensemble: sum_k w_k P_k over all K learners.
ProbMatrix predict_proba_cotrain(const CotrainModel& model, const Matrix& rows);

// Argmax of the ensemble probabilities, ties toward the lower class index.
std::vector<int> predict_cotrain(const CotrainModel& model, const Matrix& rows);

} // namespace ctow
