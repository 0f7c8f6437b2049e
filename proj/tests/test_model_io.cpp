#include "doctest.h"

#include <cmath>
#include <string>
#include <vector>

#include "ctow/errors.hpp"
#include "ctow/model_io.hpp"
#include "ctow/report.hpp"
#include "test_support.hpp"

using namespace ctow;

namespace {

ModelBundle trained_bundle(std::uint64_t seed) {
    const Dataset ds = testsup::make_blobs(40, 5.0, seed);
    const SplitPlan split = stratified_split(ds, 0.2, 5, 0, seed);
    CotrainConfig cfg;
    cfg.seed = seed;
    ModelBundle bundle;
    bundle.model = run_cotraining(ds, split, cfg);
    bundle.feature_names = ds.feature_names;
    bundle.label_names = ds.label_names;
    bundle.label_column = "label";
    return bundle;
}

} // namespace

TEST_CASE("saved models reload bit identically") {
    const ModelBundle bundle = trained_bundle(31);
    testsup::TempFile file("model.json");
    save_model(file.path(), bundle);
    const ModelBundle back = load_model(file.path());

    CHECK(back.feature_names == bundle.feature_names);
    CHECK(back.label_names == bundle.label_names);
    CHECK(back.label_column == bundle.label_column);
    CHECK(back.model.class_count == bundle.model.class_count);
    CHECK(back.model.feature_count == bundle.model.feature_count);
    CHECK(back.model.rounds_run == bundle.model.rounds_run);
    CHECK(back.model.weights.w == bundle.model.weights.w);
    CHECK(back.model.weights.fixed_last == bundle.model.weights.fixed_last);
    REQUIRE(back.model.gbdts.size() == bundle.model.gbdts.size());
    for (std::size_t k = 0; k < back.model.gbdts.size(); ++k)
        CHECK(back.model.gbdts[k] == bundle.model.gbdts[k]);
    REQUIRE(back.model.tsvm.has_value() == bundle.model.tsvm.has_value());
    CHECK(back.model.tsvm->per_class == bundle.model.tsvm->per_class);
    CHECK(back.model.tsvm->margin_density == bundle.model.tsvm->margin_density);
    REQUIRE(back.model.history.size() == bundle.model.history.size());
    for (std::size_t r = 0; r < back.model.history.size(); ++r) {
        CHECK(back.model.history[r].weights == bundle.model.history[r].weights);
        CHECK(back.model.history[r].objective == bundle.model.history[r].objective);
    }

    // bit-identical predictions on fresh points
    const Dataset probe = testsup::make_blobs(10, 5.0, 99);
    const ProbMatrix pa = predict_proba_cotrain(bundle.model, probe.features);
    const ProbMatrix pb = predict_proba_cotrain(back.model, probe.features);
    REQUIRE(pa.rows() == pb.rows());
    for (std::size_t i = 0; i < pa.rows(); ++i)
        for (std::size_t j = 0; j < pa.cols(); ++j) CHECK(pa(i, j) == pb(i, j));

    // config fields survive the trip
    CHECK(back.model.config.beta == bundle.model.config.beta);
    CHECK(back.model.config.seed == bundle.model.config.seed);
    CHECK(back.model.config.gbdt.rounds == bundle.model.config.gbdt.rounds);
    CHECK(back.model.config.tsvm.c_unlabeled == bundle.model.config.tsvm.c_unlabeled);
}

TEST_CASE("json round trip preserves the tree-only ablation") {
    const Dataset ds = testsup::make_blobs(30, 5.0, 17);
    const SplitPlan split = stratified_split(ds, 0.3, 5, 1, 17);
    CotrainConfig cfg;
    cfg.seed = 17;
    cfg.use_tsvm = false;
    ModelBundle bundle;
    bundle.model = run_cotraining(ds, split, cfg);
    bundle.feature_names = ds.feature_names;
    bundle.label_names = ds.label_names;
    bundle.label_column = "label";

    const ModelBundle back = model_from_json(model_to_json(bundle));
    CHECK_FALSE(back.model.tsvm.has_value());
    CHECK(back.model.gbdts.size() == 4);
    CHECK_FALSE(back.model.weights.fixed_last.has_value());
    for (std::size_t k = 0; k < 4; ++k) CHECK(back.model.gbdts[k] == bundle.model.gbdts[k]);
}

TEST_CASE("corrupt bundles are rejected with a clear error") {
    const ModelBundle bundle = trained_bundle(8);
    nlohmann::json good = model_to_json(bundle);

    SUBCASE("foreign format tag") {
        nlohmann::json j = good;
        j["format"] = "something-else";
        CHECK_THROWS_AS(model_from_json(j), CorruptBundle);
    }
    SUBCASE("missing weights") {
        nlohmann::json j = good;
        j.erase("weights");
        CHECK_THROWS_AS(model_from_json(j), CorruptBundle);
    }
    SUBCASE("wrong type inside the tree array") {
        nlohmann::json j = good;
        j["gbdts"][0]["trees"][0][0] = "oops";
        CHECK_THROWS_AS(model_from_json(j), CorruptBundle);
    }
    SUBCASE("weights off the simplex") {
        nlohmann::json j = good;
        j["weights"]["w"] = {0.9, 0.9, 0.9, 0.9};
        CHECK_THROWS_AS(model_from_json(j), CorruptBundle);
    }
    SUBCASE("not an object") {
        CHECK_THROWS_AS(model_from_json(nlohmann::json::array()), CorruptBundle);
    }
}

TEST_CASE("unreadable or malformed files raise CorruptBundle") {
    CHECK_THROWS_AS(load_model("/nonexistent/model.json"), CorruptBundle);
    testsup::TempFile file("garbage.json", "this is not json {");
    CHECK_THROWS_AS(load_model(file.path()), CorruptBundle);
}

TEST_CASE("config json round trips every field") {
    CotrainConfig cfg;
    cfg.k_learners = 5;
    cfg.beta = 0.9;
    cfg.alpha = 0.35;
    cfg.mu = 1.25;
    cfg.t_inner = 4;
    cfg.bootstrap_fraction = 0.5;
    cfg.max_rounds = 7;
    cfg.seed = 987654321;
    cfg.use_prior = false;
    cfg.use_tsvm = false;
    cfg.normalize_loo = true;
    cfg.gbdt.rounds = 12;
    cfg.gbdt.max_depth = 5;
    cfg.gbdt.learning_rate = 0.05;
    cfg.gbdt.l2_reg = 2.5;
    cfg.gbdt.min_child_weight = 0.25;
    cfg.tsvm.c_labeled = 3.0;
    cfg.tsvm.c_unlabeled = 0.5;
    cfg.tsvm.temperature = 2.0;
    cfg.tsvm.max_outer = 9;
    cfg.tsvm.epochs = 123;

    const CotrainConfig back = config_from_json(config_to_json(cfg));
    CHECK(back.k_learners == cfg.k_learners);
    CHECK(back.beta == cfg.beta);
    CHECK(back.alpha == cfg.alpha);
    CHECK(back.mu == cfg.mu);
    CHECK(back.t_inner == cfg.t_inner);
    CHECK(back.bootstrap_fraction == cfg.bootstrap_fraction);
    CHECK(back.max_rounds == cfg.max_rounds);
    CHECK(back.seed == cfg.seed);
    CHECK(back.use_prior == cfg.use_prior);
    CHECK(back.use_tsvm == cfg.use_tsvm);
    CHECK(back.normalize_loo == cfg.normalize_loo);
    CHECK(back.gbdt.rounds == cfg.gbdt.rounds);
    CHECK(back.gbdt.max_depth == cfg.gbdt.max_depth);
    CHECK(back.gbdt.learning_rate == cfg.gbdt.learning_rate);
    CHECK(back.gbdt.l2_reg == cfg.gbdt.l2_reg);
    CHECK(back.gbdt.min_child_weight == cfg.gbdt.min_child_weight);
    CHECK(back.tsvm.c_labeled == cfg.tsvm.c_labeled);
    CHECK(back.tsvm.c_unlabeled == cfg.tsvm.c_unlabeled);
    CHECK(back.tsvm.temperature == cfg.tsvm.temperature);
    CHECK(back.tsvm.max_outer == cfg.tsvm.max_outer);
    CHECK(back.tsvm.epochs == cfg.tsvm.epochs);
}

TEST_CASE("manifest json round trips through a dump") {
    RunManifest manifest;
    manifest.config.seed = 42;
    manifest.config.beta = 0.8;
    manifest.dataset = DatasetFingerprint{"data/some.csv", "label", 120, 4, "00ff00ff00ff00ff"};
    manifest.folds = 3;
    manifest.label_rates = {0.1, 0.5};
    manifest.methods = {Method::Ctow, Method::GbdtOnly};
    manifest.toolkit_version = "1.2.3";

    const nlohmann::json j = manifest_to_json(manifest);
    CHECK(j.at("seed").get<std::uint64_t>() == 42);
    const RunManifest back = manifest_from_json(nlohmann::json::parse(j.dump()));
    CHECK(back.config.seed == manifest.config.seed);
    CHECK(back.config.beta == manifest.config.beta);
    CHECK(back.dataset == manifest.dataset);
    CHECK(back.folds == manifest.folds);
    CHECK(back.label_rates == manifest.label_rates);
    CHECK(back.methods == manifest.methods);
    CHECK(back.toolkit_version == manifest.toolkit_version);
    CHECK(manifest_to_json(back).dump() == j.dump());
}

TEST_CASE("content hashing is stable and atomic writes land complete") {
    // FNV-1a of an empty string is the offset basis
    CHECK(fnv1a64_hex("") == "cbf29ce484222325");
    CHECK(fnv1a64_hex("a") != fnv1a64_hex("b"));
    CHECK(fnv1a64_hex("ctow") == fnv1a64_hex("ctow"));

    testsup::TempFile file("atomic.txt");
    write_file_atomic(file.path(), "payload");
    CHECK(hash_file(file.path()) == fnv1a64_hex("payload"));
    write_file_atomic(file.path(), "other");
    CHECK(hash_file(file.path()) == fnv1a64_hex("other"));
    CHECK_THROWS_AS(hash_file("/nonexistent/x.bin"), std::runtime_error);
}
