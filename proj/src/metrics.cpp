#include "ctow/metrics.hpp"

#include <chrono>
#include <cmath>
#include <stdexcept>

#include "ctow/errors.hpp"
#include "ctow/random.hpp"

namespace ctow {

namespace {

constexpr std::uint64_t kSeedBaseline = 0x6001;

} // namespace

double accuracy(std::span<const int> predicted, std::span<const int> truth) {
    if (predicted.size() != truth.size())
        throw LengthMismatch("prediction and truth lengths differ");
    if (predicted.empty()) throw std::invalid_argument("accuracy of zero instances");
    std::size_t hits = 0;
    for (std::size_t i = 0; i < predicted.size(); ++i)
        if (predicted[i] == truth[i]) ++hits;
    return static_cast<double>(hits) / static_cast<double>(predicted.size());
}

ContingencyTable contingency(std::span<const int> pred_a, std::span<const int> pred_b,
                             std::span<const int> truth) {
    if (pred_a.size() != truth.size() || pred_b.size() != truth.size())
        throw LengthMismatch("contingency inputs must share a length");
    ContingencyTable t;
    for (std::size_t i = 0; i < truth.size(); ++i) {
        const bool a_ok = pred_a[i] == truth[i];
        const bool b_ok = pred_b[i] == truth[i];
        if (a_ok && b_ok)
            ++t.n11;
        else if (a_ok)
            ++t.n01;
        else if (b_ok)
            ++t.n10;
        else
            ++t.n00;
    }
    return t;
}

std::optional<double> rho(const ContingencyTable& t) {
    const double f1 = static_cast<double>(t.n11 + t.n10);
    const double f2 = static_cast<double>(t.n01 + t.n00);
    const double f3 = static_cast<double>(t.n11 + t.n01);
    const double f4 = static_cast<double>(t.n10 + t.n00);
    if (f1 == 0.0 || f2 == 0.0 || f3 == 0.0 || f4 == 0.0) return std::nullopt;
    const double num = static_cast<double>(t.n11) * static_cast<double>(t.n00) -
                       static_cast<double>(t.n01) * static_cast<double>(t.n10);
    return num / std::sqrt(f1 * f2 * f3 * f4);
}

std::string method_name(Method m) {
    switch (m) {
        case Method::Ctow: return "ctow";
        case Method::CtowNp: return "ctow-np";
        case Method::CtowNt: return "ctow-nt";
        case Method::GbdtOnly: return "gbdt-only";
        case Method::TsvmOnly: return "tsvm-only";
    }
    return "ctow";
}

std::optional<Method> parse_method(const std::string& name) {
    if (name == "ctow") return Method::Ctow;
    if (name == "ctow-np") return Method::CtowNp;
    if (name == "ctow-nt") return Method::CtowNt;
    if (name == "gbdt-only") return Method::GbdtOnly;
    if (name == "tsvm-only") return Method::TsvmOnly;
    return std::nullopt;
}

CotrainConfig apply_method(CotrainConfig config, Method method) {
    switch (method) {
        case Method::Ctow:
            config.use_prior = true;
            config.use_tsvm = true;
            break;
        case Method::CtowNp:
            config.use_prior = false;
            config.use_tsvm = true;
            break;
        case Method::CtowNt:
            config.use_tsvm = false;
            break;
        case Method::GbdtOnly:
        case Method::TsvmOnly:
            break;
    }
    return config;
}

CvReport cross_validate(const Dataset& ds, const CotrainConfig& config, int folds,
                        double label_rate, Method method) {
    if (!ds.fully_labeled())
        throw std::invalid_argument("cross-validation needs every row labeled");
    const auto started = std::chrono::steady_clock::now();

    CvReport report;
    report.method = method;
    report.label_rate = label_rate;
    report.folds = folds;
    report.config = apply_method(config, method);

    for (int fold = 0; fold < folds; ++fold) {
        const SplitPlan split = stratified_split(ds, label_rate, folds, fold, config.seed);
        const Matrix test_x = take_rows(ds.features, split.test_ids);
        std::vector<int> test_y;
        test_y.reserve(split.test_ids.size());
        for (int id : split.test_ids) test_y.push_back(ds.labels[static_cast<std::size_t>(id)]);

        FoldResult result;
        result.fold = fold;
        if (method == Method::GbdtOnly || method == Method::TsvmOnly) {
            const Matrix xl = take_rows(ds.features, split.labeled_ids);
            std::vector<int> yl;
            yl.reserve(split.labeled_ids.size());
            for (int id : split.labeled_ids) yl.push_back(ds.labels[static_cast<std::size_t>(id)]);
            ProbMatrix probs;
            if (method == Method::GbdtOnly) {
                GbdtModel model = train_gbdt(xl, yl, ds.class_count, config.gbdt,
                                             derive_seed(config.seed, kSeedBaseline));
                probs = predict_proba_gbdt(model, test_x);
            } else {
                const Matrix xu = take_rows(ds.features, split.unlabeled_ids);
                TsvmConfig tc = config.tsvm;
                tc.seed = derive_seed(config.seed, kSeedBaseline);
                TsvmModel model = train_tsvm(xl, yl, ds.class_count, xu, tc);
                probs = predict_proba_tsvm(model, test_x);
            }
            result.accuracy = accuracy(argmax_rows(probs), test_y);
        } else {
            CotrainModel model = run_cotraining(ds, split, report.config);
            result.accuracy = accuracy(predict_cotrain(model, test_x), test_y);
            result.history = std::move(model.history);
        }
        report.fold_results.push_back(std::move(result));
    }

    double mean = 0.0;
    for (const FoldResult& f : report.fold_results) mean += f.accuracy;
    mean /= static_cast<double>(report.fold_results.size());
    double var = 0.0;
    for (const FoldResult& f : report.fold_results) {
        const double d = f.accuracy - mean;
        var += d * d;
    }
    var /= static_cast<double>(report.fold_results.size());
    report.mean_accuracy = mean;
    report.std_accuracy = std::sqrt(var);
    report.wall_time_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    return report;
}

} // namespace ctow
