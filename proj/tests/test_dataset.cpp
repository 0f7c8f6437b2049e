#include "doctest.h"

#include <algorithm>
#include <limits>
#include <set>
#include <string>
#include <vector>

#include "ctow/dataset.hpp"
#include "ctow/errors.hpp"
#include "test_support.hpp"

using namespace ctow;
using testsup::TempFile;

namespace {

Dataset two_class(int n0, int n1) {
    Dataset ds;
    ds.class_count = 2;
    ds.feature_names = {"x"};
    ds.label_names = {"a", "b"};
    ds.features = Matrix(static_cast<std::size_t>(n0 + n1), 1);
    for (int i = 0; i < n0 + n1; ++i) {
        ds.features(static_cast<std::size_t>(i), 0) = i;
        ds.labels.push_back(i < n0 ? 0 : 1);
    }
    return ds;
}

} // namespace

TEST_CASE("csv loading maps labels by first appearance") {
    TempFile csv("basic.csv",
                 "x1,x2,label\n"
                 "1.0,2.0,yes\n"
                 "+3.5,4e1,no\n"
                 "0.5, 1.25 ,yes\n"
                 "2.0,3.0,\n");
    const Dataset ds = load_csv(csv.path(), std::string("label"));
    CHECK(ds.n() == 4);
    CHECK(ds.dim() == 2);
    CHECK(ds.class_count == 2);
    CHECK(ds.feature_names == std::vector<std::string>{"x1", "x2"});
    CHECK(ds.label_names == std::vector<std::string>{"yes", "no"});
    CHECK(ds.labels == std::vector<int>{0, 1, 0, Dataset::kNoLabel});
    CHECK(ds.features(1, 0) == 3.5);
    CHECK(ds.features(1, 1) == 40.0);
    CHECK(ds.features(2, 1) == 1.25);
    CHECK(ds.has_label(0));
    CHECK_FALSE(ds.has_label(3));
    CHECK_FALSE(ds.fully_labeled());
}

TEST_CASE("label column may sit anywhere; blank lines are skipped") {
    TempFile csv("middle.csv",
                 "a,label,b\n"
                 "1,x,2\n"
                 "\n"
                 "3,y,4\n");
    const Dataset ds = load_csv(csv.path(), std::string("label"));
    CHECK(ds.n() == 2);
    CHECK(ds.feature_names == std::vector<std::string>{"a", "b"});
    CHECK(ds.features(0, 0) == 1.0);
    CHECK(ds.features(0, 1) == 2.0);
    CHECK(ds.labels == std::vector<int>{0, 1});
}

TEST_CASE("no label column requested leaves every row unlabeled") {
    TempFile csv("nolabel.csv", "x1,x2\n1,2\n3,4\n");
    const Dataset ds = load_csv(csv.path(), std::nullopt);
    CHECK(ds.class_count == 0);
    CHECK(ds.dim() == 2);
    CHECK(ds.labels == std::vector<int>{Dataset::kNoLabel, Dataset::kNoLabel});
}

TEST_CASE("malformed csv reports the offending line") {
    SUBCASE("ragged row") {
        TempFile csv("ragged.csv", "x,label\n1,a\n2,b,extra\n");
        CHECK_THROWS_WITH_AS(load_csv(csv.path(), std::string("label")),
                             doctest::Contains("line 3"), MalformedCsv);
    }
    SUBCASE("non-numeric feature") {
        TempFile csv("text.csv", "x,label\noops,a\n");
        try {
            load_csv(csv.path(), std::string("label"));
            FAIL("expected MalformedCsv");
        } catch (const MalformedCsv& e) {
            const std::string msg = e.what();
            CHECK(msg.find("line 2") != std::string::npos);
            CHECK(msg.find("'x'") != std::string::npos);
            CHECK(msg.find("oops") != std::string::npos);
        }
    }
    SUBCASE("non-finite feature") {
        TempFile csv("inf.csv", "x,label\ninf,a\n");
        CHECK_THROWS_AS(load_csv(csv.path(), std::string("label")), MalformedCsv);
        TempFile csv2("nan.csv", "x,label\nnan,a\n");
        CHECK_THROWS_AS(load_csv(csv2.path(), std::string("label")), MalformedCsv);
    }
    SUBCASE("empty feature cell") {
        TempFile csv("hole.csv", "x,y,label\n1,,a\n");
        CHECK_THROWS_WITH_AS(load_csv(csv.path(), std::string("label")),
                             doctest::Contains("'y'"), MalformedCsv);
    }
    SUBCASE("missing file") {
        CHECK_THROWS_AS(load_csv("/nonexistent/nope.csv", std::nullopt), MalformedCsv);
    }
}

TEST_CASE("unknown or empty inputs") {
    TempFile csv("ok.csv", "x,label\n1,a\n");
    CHECK_THROWS_AS(load_csv(csv.path(), std::string("target")), UnknownColumn);

    TempFile headeronly("header.csv", "x,label\n");
    CHECK_THROWS_AS(load_csv(headeronly.path(), std::string("label")), EmptyDataset);

    TempFile empty("empty.csv");
    empty.write("");
    CHECK_THROWS_AS(load_csv(empty.path(), std::nullopt), EmptyDataset);

    TempFile labelonly("only.csv", "label\na\n");
    CHECK_THROWS_AS(load_csv(labelonly.path(), std::string("label")), EmptyDataset);
}

TEST_CASE("dataset validation catches inconsistent fields") {
    Dataset ds = two_class(3, 3);
    CHECK_NOTHROW(validate_dataset(ds));

    Dataset bad_label = ds;
    bad_label.labels[0] = 5;
    CHECK_THROWS_AS(validate_dataset(bad_label), DimensionMismatch);

    Dataset bad_count = ds;
    bad_count.labels.pop_back();
    CHECK_THROWS_AS(validate_dataset(bad_count), DimensionMismatch);

    Dataset bad_feature = ds;
    bad_feature.features(0, 0) = std::numeric_limits<double>::quiet_NaN();
    CHECK_THROWS_AS(validate_dataset(bad_feature), MalformedCsv);
}

TEST_CASE("stratified split partitions every row exactly once") {
    const Dataset ds = two_class(600, 400);
    const SplitPlan plan = stratified_split(ds, 0.1, 5, 2, 7);

    CHECK(plan.test_ids.size() == 200);
    CHECK(plan.labeled_ids.size() == 80);      // ceil(0.1*480) + ceil(0.1*320)
    CHECK(plan.unlabeled_ids.size() == 720);
    CHECK(plan.label_rate == 0.1);
    CHECK(plan.seed == 7);

    std::set<int> seen;
    for (const auto* ids : {&plan.labeled_ids, &plan.unlabeled_ids, &plan.test_ids}) {
        CHECK(std::is_sorted(ids->begin(), ids->end()));
        seen.insert(ids->begin(), ids->end());
    }
    CHECK(seen.size() == 1000);
    CHECK(*seen.begin() == 0);
    CHECK(*seen.rbegin() == 999);

    // both the test fold and the labeled pool are stratified
    const auto test_labels = testsup::labels_at(ds, plan.test_ids);
    CHECK(std::count(test_labels.begin(), test_labels.end(), 0) == 120);
    const auto lab = testsup::labels_at(ds, plan.labeled_ids);
    CHECK(std::count(lab.begin(), lab.end(), 0) == 48);
    CHECK(std::count(lab.begin(), lab.end(), 1) == 32);
}

TEST_CASE("full label rate leaves no unlabeled pool") {
    const Dataset ds = two_class(20, 15);
    const SplitPlan plan = stratified_split(ds, 1.0, 5, 0, 3);
    CHECK(plan.unlabeled_ids.empty());
    CHECK(plan.labeled_ids.size() + plan.test_ids.size() == 35);
}

TEST_CASE("every class keeps at least one labeled row") {
    const Dataset ds = two_class(10, 10);
    const SplitPlan plan = stratified_split(ds, 0.001, 2, 0, 1);
    const auto lab = testsup::labels_at(ds, plan.labeled_ids);
    CHECK(std::count(lab.begin(), lab.end(), 0) == 1);
    CHECK(std::count(lab.begin(), lab.end(), 1) == 1);
}

TEST_CASE("splits are deterministic in the seed and vary across folds") {
    const Dataset ds = two_class(60, 40);
    const SplitPlan a = stratified_split(ds, 0.2, 5, 1, 42);
    const SplitPlan b = stratified_split(ds, 0.2, 5, 1, 42);
    CHECK(a.labeled_ids == b.labeled_ids);
    CHECK(a.unlabeled_ids == b.unlabeled_ids);
    CHECK(a.test_ids == b.test_ids);

    const SplitPlan c = stratified_split(ds, 0.2, 5, 0, 42);
    CHECK(a.test_ids != c.test_ids);

    // folds tile the dataset: each row appears in exactly one test fold
    std::set<int> tested;
    for (int f = 0; f < 5; ++f) {
        const SplitPlan p = stratified_split(ds, 0.2, 5, f, 42);
        for (int id : p.test_ids) CHECK(tested.insert(id).second);
    }
    CHECK(tested.size() == 100);
}

TEST_CASE("split argument validation") {
    const Dataset ds = two_class(10, 10);
    CHECK_THROWS_AS(stratified_split(ds, 0.2, 1, 0, 0), std::invalid_argument);
    CHECK_THROWS_AS(stratified_split(ds, 0.0, 5, 0, 0), std::invalid_argument);
    CHECK_THROWS_AS(stratified_split(ds, 1.2, 5, 0, 0), std::invalid_argument);
    CHECK_THROWS_AS(stratified_split(ds, 0.2, 5, 5, 0), BadFoldIndex);
    CHECK_THROWS_AS(stratified_split(ds, 0.2, 5, -1, 0), BadFoldIndex);

    const Dataset tiny = two_class(3, 10);
    CHECK_THROWS_AS(stratified_split(tiny, 0.2, 5, 0, 0), ClassTooSmall);

    Dataset holes = two_class(10, 10);
    holes.labels[0] = Dataset::kNoLabel;
    CHECK_THROWS_AS(stratified_split(holes, 0.2, 5, 0, 0), std::invalid_argument);
}
