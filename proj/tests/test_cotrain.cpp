#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <set>
#include <vector>

#include "ctow/cotrain.hpp"
#include "ctow/errors.hpp"
#include "test_support.hpp"

using namespace ctow;

namespace {

SplitPlan blob_split(const Dataset& ds, double label_rate, std::uint64_t seed) {
    return stratified_split(ds, label_rate, 5, 0, seed);
}

} // namespace

TEST_CASE("leave-one-out rows sum to one minus the held-out weight") {
    ProbMatrix p0(2, 2), p1(2, 2), p2(2, 2);
    p0(0, 0) = 1.0;   p0(1, 1) = 1.0;
    p1(0, 1) = 1.0;   p1(1, 0) = 1.0;
    p2(0, 0) = 0.5;   p2(0, 1) = 0.5;
    p2(1, 0) = 0.5;   p2(1, 1) = 0.5;
    const WeightVector w{{0.5, 0.3, 0.2}, std::nullopt};
    const std::vector<int> subset{0, 1};

    const ProbMatrix loo = leave_one_out_proba({p0, p1, p2}, w, 0, subset);
    // 0.3 * p1 + 0.2 * p2
    CHECK(loo(0, 0) == doctest::Approx(0.1));
    CHECK(loo(0, 1) == doctest::Approx(0.4));
    CHECK(loo(1, 0) == doctest::Approx(0.4));
    CHECK(loo(1, 1) == doctest::Approx(0.1));

    // a zero-weight holdout leaves a fully normalized row
    const WeightVector w2{{0.0, 0.5, 0.5}, std::nullopt};
    const ProbMatrix full = leave_one_out_proba({p0, p1, p2}, w2, 0, subset);
    CHECK(full(0, 0) + full(0, 1) == doctest::Approx(1.0));

    SUBCASE("subset selects and reorders rows") {
        const std::vector<int> one{1};
        const ProbMatrix sub = leave_one_out_proba({p0, p1, p2}, w, 1, one);
        REQUIRE(sub.rows() == 1);
        // 0.5 * p0 + 0.2 * p2 at row 1
        CHECK(sub(0, 0) == doctest::Approx(0.1));
        CHECK(sub(0, 1) == doctest::Approx(0.6));
    }

    SUBCASE("optional normalization rescales rows to sum 1") {
        const ProbMatrix norm = leave_one_out_proba({p0, p1, p2}, w, 0, subset, true);
        CHECK(norm(0, 0) + norm(0, 1) == doctest::Approx(1.0));
        CHECK(norm(0, 1) == doctest::Approx(0.8));  // 0.4 / 0.5
    }

    SUBCASE("index checks") {
        CHECK_THROWS_AS(leave_one_out_proba({p0, p1, p2}, w, 3, subset), BadIndex);
        const std::vector<int> oob{5};
        CHECK_THROWS_AS(leave_one_out_proba({p0, p1, p2}, w, 0, oob), BadIndex);
    }
}

TEST_CASE("pseudo selection keeps confident rows and breaks ties low") {
    ProbMatrix pbar(3, 3);
    pbar(0, 0) = 0.80; pbar(0, 1) = 0.10; pbar(0, 2) = 0.10;
    pbar(1, 0) = 0.40; pbar(1, 1) = 0.40; pbar(1, 2) = 0.20;
    pbar(2, 0) = 0.10; pbar(2, 1) = 0.15; pbar(2, 2) = 0.75;
    const std::vector<int> subset{7, 3, 9};

    const PseudoBatch batch = select_pseudo(pbar, subset, 0.75, 2);
    CHECK(batch.learner == 2);
    REQUIRE(batch.entries.size() == 2);
    CHECK(batch.entries[0].row == 7);
    CHECK(batch.entries[0].label == 0);
    CHECK(batch.entries[0].confidence == doctest::Approx(0.80));
    CHECK(batch.entries[1].row == 9);
    CHECK(batch.entries[1].label == 2);

    // the 0.40/0.40 tie picks class 0 once the threshold admits it
    const PseudoBatch low = select_pseudo(pbar, subset, 0.40, 0);
    REQUIRE(low.entries.size() == 3);
    CHECK(low.entries[1].row == 3);
    CHECK(low.entries[1].label == 0);

    const PseudoBatch none = select_pseudo(pbar, subset, 0.95, 1);
    CHECK(none.entries.empty());
}

TEST_CASE("bootstrap draws keep every class even under heavy skew") {
    std::vector<int> labels(40, 0);
    labels[39] = 1;  // a 1-in-40 minority class
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        Rng rng(seed);
        const std::vector<int> rows = bootstrap_sample(labels, rng);
        CHECK(rows.size() == labels.size());
        std::set<int> classes;
        for (int r : rows) {
            CHECK(r >= 0);
            CHECK(r < 40);
            classes.insert(labels[static_cast<std::size_t>(r)]);
        }
        CHECK(classes.size() == 2);
    }
}

TEST_CASE("initialization trains three trees plus the tsvm over the unlabeled pool") {
    const Dataset ds = testsup::make_blobs(50, 5.0, 20260815);
    const SplitPlan split = blob_split(ds, 0.2, 1);
    CotrainConfig cfg;
    cfg.seed = 1;

    const Initialized init = initialize(ds, split, cfg);
    CHECK(init.gbdts.size() == 3);
    REQUIRE(init.tsvm.has_value());
    REQUIRE(init.probs.size() == 4);
    REQUIRE(init.bootstrap_rows.size() == 3);
    for (const auto& rows : init.bootstrap_rows)
        CHECK(rows.size() == split.labeled_ids.size());
    for (const auto& p : init.probs) {
        CHECK(p.rows() == split.unlabeled_ids.size());
        CHECK(p.cols() == 2);
        for (std::size_t i = 0; i < p.rows(); ++i) {
            double sum = 0.0;
            for (std::size_t j = 0; j < p.cols(); ++j) sum += p(i, j);
            CHECK(sum == doctest::Approx(1.0).epsilon(1e-9));
        }
    }

    SUBCASE("disabling the tsvm swaps in a fourth bootstrapped tree learner") {
        CotrainConfig no_tsvm = cfg;
        no_tsvm.use_tsvm = false;
        const Initialized alt = initialize(ds, split, no_tsvm);
        CHECK(alt.gbdts.size() == 4);
        CHECK_FALSE(alt.tsvm.has_value());
        CHECK(alt.probs.size() == 4);
        CHECK(alt.bootstrap_rows.size() == 4);
    }
}

TEST_CASE("an unreachable confidence threshold stops after two fixed-point rounds") {
    const Dataset ds = testsup::make_blobs(50, 5.0, 20260815);
    const SplitPlan split = blob_split(ds, 0.2, 3);
    CotrainConfig cfg;
    cfg.seed = 3;
    cfg.beta = 0.999;  // leave-one-out mass tops out at 1 - w_k < beta

    const CotrainModel model = run_cotraining(ds, split, cfg);
    CHECK(model.rounds_run == 2);
    REQUIRE(model.history.size() == 2);
    for (const RoundRecord& rec : model.history) {
        CHECK(rec.batch_sizes == std::vector<int>{0, 0, 0});
        CHECK(rec.weights.size() == 4);
    }

    // learners never retrained: they equal a fresh initialization
    const Initialized init = initialize(ds, split, cfg);
    REQUIRE(model.gbdts.size() == init.gbdts.size());
    for (std::size_t k = 0; k < init.gbdts.size(); ++k) CHECK(model.gbdts[k] == init.gbdts[k]);
    REQUIRE(model.tsvm.has_value());
    CHECK(*model.tsvm == *init.tsvm);
}

TEST_CASE("co-training on separated blobs fills batches and fits the test fold") {
    const Dataset ds = testsup::make_blobs(50, 5.0, 20260815);
    const SplitPlan split = blob_split(ds, 0.1, 1);
    CotrainConfig cfg;
    cfg.seed = 1;

    const CotrainModel model = run_cotraining(ds, split, cfg);
    CHECK(model.rounds_run >= 1);
    CHECK(model.class_count == 2);
    CHECK(model.feature_count == 2);
    check_weight_vector(model.weights);

    bool any_batch = false;
    for (const RoundRecord& rec : model.history) {
        REQUIRE(rec.weights.size() == 4);
        REQUIRE(rec.batch_sizes.size() == 3);
        REQUIRE(rec.margin_density.has_value());
        const int cap = static_cast<int>(0.8 * static_cast<double>(split.unlabeled_ids.size()));
        for (int b : rec.batch_sizes) {
            CHECK(b <= cap);
            if (b > 0) any_batch = true;
        }
        CHECK(std::isfinite(rec.objective));
    }
    CHECK(any_batch);

    // weight pinning: the tsvm weight equals the prior at the recorded density
    const RoundRecord& last = model.history.back();
    CHECK(model.weights.fixed_last.has_value());
    CHECK(model.weights.w.back() ==
          doctest::Approx(prior_weight(*last.margin_density, cfg.alpha)));

    Matrix test(split.test_ids.size(), 2);
    std::vector<int> want;
    for (std::size_t i = 0; i < split.test_ids.size(); ++i) {
        const auto row = static_cast<std::size_t>(split.test_ids[i]);
        test(i, 0) = ds.features(row, 0);
        test(i, 1) = ds.features(row, 1);
        want.push_back(ds.labels[row]);
    }
    const std::vector<int> got = predict_cotrain(model, test);
    int hits = 0;
    for (std::size_t i = 0; i < want.size(); ++i)
        if (got[i] == want[i]) ++hits;
    CHECK(static_cast<double>(hits) / static_cast<double>(want.size()) >= 0.95);

    const ProbMatrix p = predict_proba_cotrain(model, test);
    for (std::size_t i = 0; i < p.rows(); ++i) {
        double sum = 0.0;
        for (std::size_t j = 0; j < p.cols(); ++j) sum += p(i, j);
        CHECK(sum == doctest::Approx(1.0).epsilon(1e-9));
    }
}

TEST_CASE("ablation switches change the weight structure") {
    const Dataset ds = testsup::make_blobs(40, 5.0, 6);
    const SplitPlan split = blob_split(ds, 0.2, 2);

    CotrainConfig no_prior;
    no_prior.seed = 2;
    no_prior.use_prior = false;
    const CotrainModel free = run_cotraining(ds, split, no_prior);
    CHECK_FALSE(free.weights.fixed_last.has_value());
    for (const RoundRecord& rec : free.history) CHECK(rec.margin_density.has_value());

    CotrainConfig no_tsvm;
    no_tsvm.seed = 2;
    no_tsvm.use_tsvm = false;
    const CotrainModel trees = run_cotraining(ds, split, no_tsvm);
    CHECK_FALSE(trees.tsvm.has_value());
    CHECK(trees.gbdts.size() == 4);
    CHECK_FALSE(trees.weights.fixed_last.has_value());
    for (const RoundRecord& rec : trees.history) {
        CHECK_FALSE(rec.margin_density.has_value());
        CHECK(rec.batch_sizes.size() == 4);
    }
}

TEST_CASE("co-training is deterministic in the seed") {
    const Dataset ds = testsup::make_blobs(30, 4.0, 12);
    const SplitPlan split = blob_split(ds, 0.2, 9);
    CotrainConfig cfg;
    cfg.seed = 9;

    const CotrainModel a = run_cotraining(ds, split, cfg);
    const CotrainModel b = run_cotraining(ds, split, cfg);
    CHECK(a.rounds_run == b.rounds_run);
    CHECK(a.weights.w == b.weights.w);
    REQUIRE(a.history.size() == b.history.size());
    for (std::size_t r = 0; r < a.history.size(); ++r) {
        CHECK(a.history[r].weights == b.history[r].weights);
        CHECK(a.history[r].batch_sizes == b.history[r].batch_sizes);
        CHECK(a.history[r].objective == b.history[r].objective);
    }
    for (std::size_t k = 0; k < a.gbdts.size(); ++k) CHECK(a.gbdts[k] == b.gbdts[k]);
}

TEST_CASE("an empty unlabeled pool skips the rounds entirely") {
    const Dataset ds = testsup::make_blobs(30, 4.0, 15);
    SplitPlan split = stratified_split(ds, 1.0, 5, 0, 15);
    REQUIRE(split.unlabeled_ids.empty());
    CotrainConfig cfg;
    cfg.seed = 15;

    const CotrainModel model = run_cotraining(ds, split, cfg);
    CHECK(model.rounds_run == 0);
    CHECK(model.history.empty());
    REQUIRE(model.weights.w.size() == 4);
    CHECK(model.weights.fixed_last.has_value());
    double sum = 0.0;
    for (double w : model.weights.w) sum += w;
    CHECK(sum == doctest::Approx(1.0));

    // the model still predicts
    const std::vector<int> got = predict_cotrain(model, ds.features);
    CHECK(got.size() == static_cast<std::size_t>(ds.n()));
}

TEST_CASE("cotrain configuration and split validation") {
    const Dataset ds = testsup::make_blobs(20, 4.0, 8);
    const SplitPlan split = blob_split(ds, 0.3, 8);

    CotrainConfig bad;
    bad.k_learners = 1;
    CHECK_THROWS_AS(run_cotraining(ds, split, bad), std::invalid_argument);
    bad = CotrainConfig{};
    bad.beta = 0.0;
    CHECK_THROWS_AS(run_cotraining(ds, split, bad), std::invalid_argument);
    bad = CotrainConfig{};
    bad.beta = 1.5;
    CHECK_THROWS_AS(run_cotraining(ds, split, bad), std::invalid_argument);
    bad = CotrainConfig{};
    bad.bootstrap_fraction = 0.0;
    CHECK_THROWS_AS(run_cotraining(ds, split, bad), std::invalid_argument);
    bad = CotrainConfig{};
    bad.max_rounds = 0;
    CHECK_THROWS_AS(run_cotraining(ds, split, bad), std::invalid_argument);

    SplitPlan broken = split;
    broken.labeled_ids.push_back(1000);
    CHECK_THROWS_AS(run_cotraining(ds, broken, CotrainConfig{}), BadIndex);

    SplitPlan no_labels = split;
    no_labels.labeled_ids.clear();
    CHECK_THROWS_AS(run_cotraining(ds, no_labels, CotrainConfig{}), EmptyDataset);

    SplitPlan dupe = split;
    dupe.unlabeled_ids.push_back(dupe.labeled_ids.front());
    CHECK_THROWS_AS(run_cotraining(ds, dupe, CotrainConfig{}), std::invalid_argument);
}
