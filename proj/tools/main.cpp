#include <cstdint>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "ctow/cotrain.hpp"
#include "ctow/dataset.hpp"
#include "ctow/errors.hpp"
#include "ctow/metrics.hpp"
#include "ctow/model_io.hpp"
#include "ctow/random.hpp"
#include "ctow/report.hpp"
#include "ctow/version.hpp"

namespace {

using nlohmann::json;
using namespace ctow;

std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> out;
    std::string item;
    std::istringstream in(s);
    while (std::getline(in, item, ',')) out.push_back(item);
    return out;
}

json load_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config file: " + path);
    json j;
    try {
        in >> j;
    } catch (const std::exception& e) {
        throw std::runtime_error("config file is not valid JSON: " + std::string(e.what()));
    }
    if (!j.is_object()) throw std::runtime_error("config file must hold a JSON object");
    return j;
}

template <typename T>
void take_key(const json& j, const char* key, T& field) {
    if (j.contains(key)) field = j.at(key).get<T>();
}

void apply_config_json(CotrainConfig& c, const json& j) {
    take_key(j, "k_learners", c.k_learners);
    take_key(j, "beta", c.beta);
    take_key(j, "alpha", c.alpha);
    take_key(j, "mu", c.mu);
    take_key(j, "t_inner", c.t_inner);
    take_key(j, "bootstrap_fraction", c.bootstrap_fraction);
    take_key(j, "max_rounds", c.max_rounds);
    take_key(j, "seed", c.seed);
    take_key(j, "normalize_loo", c.normalize_loo);
    if (j.contains("gbdt")) {
        const json& g = j.at("gbdt");
        take_key(g, "rounds", c.gbdt.rounds);
        take_key(g, "max_depth", c.gbdt.max_depth);
        take_key(g, "learning_rate", c.gbdt.learning_rate);
        take_key(g, "l2_reg", c.gbdt.l2_reg);
        take_key(g, "min_child_weight", c.gbdt.min_child_weight);
    }
    if (j.contains("tsvm")) {
        const json& t = j.at("tsvm");
        take_key(t, "c_labeled", c.tsvm.c_labeled);
        take_key(t, "c_unlabeled", c.tsvm.c_unlabeled);
        take_key(t, "temperature", c.tsvm.temperature);
        take_key(t, "max_outer", c.tsvm.max_outer);
        take_key(t, "epochs", c.tsvm.epochs);
    }
}

// Flags shared by the training-style commands, with the options kept around
// so explicitly passed values can override config-file keys.
struct CommonArgs {
    std::string data;
    std::string label_col;
    std::string config_path;
    std::uint64_t seed = 0;
    int k = 4;
    double beta = 0.75;
    double alpha = 0.2;
    double mu = 0.5;
    int inner_iters = 10;
    int max_rounds = 20;
    double bootstrap_frac = 0.8;
    bool normalize_loo = false;

    CLI::Option* o_seed = nullptr;
    CLI::Option* o_k = nullptr;
    CLI::Option* o_beta = nullptr;
    CLI::Option* o_alpha = nullptr;
    CLI::Option* o_mu = nullptr;
    CLI::Option* o_inner = nullptr;
    CLI::Option* o_rounds = nullptr;
    CLI::Option* o_frac = nullptr;
    CLI::Option* o_normalize = nullptr;
};

void add_common(CLI::App* sub, CommonArgs& a) {
    sub->add_option("--data", a.data, "input CSV with a header row")->required();
    sub->add_option("--label-col", a.label_col, "name of the label column")->required();
    sub->add_option("--config", a.config_path, "JSON config file (flags take precedence)");
    a.o_seed = sub->add_option("--seed", a.seed, "base seed (default 0)");
    a.o_k = sub->add_option("--k", a.k, "ensemble size including the SVM slot (default 4)");
    a.o_beta = sub->add_option("--beta", a.beta, "pseudo-label confidence threshold (default 0.75)");
    a.o_alpha = sub->add_option("--alpha", a.alpha, "margin-density threshold (default 0.2)");
    a.o_mu = sub->add_option("--mu", a.mu, "weight-solver regularization (default 0.5)");
    a.o_inner = sub->add_option("--inner-iters", a.inner_iters,
                                "weight-solver iterations per round (default 10)");
    a.o_rounds = sub->add_option("--max-rounds", a.max_rounds, "co-training round cap (default 20)");
    a.o_frac = sub->add_option("--bootstrap-frac", a.bootstrap_frac,
                               "candidate fraction of the unlabeled pool per round (default 0.8)");
    a.o_normalize = sub->add_flag("--normalize-loo", a.normalize_loo,
                                  "rescale leave-one-out ensemble rows to sum 1");
}

// defaults < config file < explicit flags
CotrainConfig make_config(const CommonArgs& a) {
    CotrainConfig c;
    if (!a.config_path.empty()) apply_config_json(c, load_config_file(a.config_path));
    if (a.o_seed->count()) c.seed = a.seed;
    if (a.o_k->count()) c.k_learners = a.k;
    if (a.o_beta->count()) c.beta = a.beta;
    if (a.o_alpha->count()) c.alpha = a.alpha;
    if (a.o_mu->count()) c.mu = a.mu;
    if (a.o_inner->count()) c.t_inner = a.inner_iters;
    if (a.o_rounds->count()) c.max_rounds = a.max_rounds;
    if (a.o_frac->count()) c.bootstrap_fraction = a.bootstrap_frac;
    if (a.o_normalize->count()) c.normalize_loo = true;
    return c;
}

DatasetFingerprint fingerprint(const Dataset& ds, const std::string& path,
                               const std::string& label_col) {
    DatasetFingerprint fp;
    fp.path = path;
    fp.label_column = label_col;
    fp.rows = ds.n();
    fp.cols = ds.dim();
    fp.content_hash = hash_file(path);
    return fp;
}

std::string csv_sibling(const std::string& out) {
    const std::string suffix = ".json";
    if (out.size() > suffix.size() && out.substr(out.size() - suffix.size()) == suffix)
        return out.substr(0, out.size() - suffix.size()) + ".csv";
    return out + ".csv";
}

std::string format_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.10g", v);
    return buf;
}

struct RunArgs {
    CommonArgs common;
    std::string label_rates = "0.1";
    int folds = 5;
    std::string methods = "ctow";
    std::string out = "report.json";
    CLI::Option* o_rates = nullptr;
    CLI::Option* o_folds = nullptr;
    CLI::Option* o_methods = nullptr;
};

int cmd_run(const RunArgs& args) {
    CotrainConfig config = make_config(args.common);

    std::string rates_str = args.label_rates;
    int folds = args.folds;
    std::string methods_str = args.methods;
    if (!args.common.config_path.empty()) {
        const json j = load_config_file(args.common.config_path);
        if (j.contains("folds") && !args.o_folds->count()) folds = j.at("folds").get<int>();
        if (j.contains("label_rates") && !args.o_rates->count()) {
            std::ostringstream s;
            bool first = true;
            for (const json& r : j.at("label_rates")) {
                if (!first) s << ',';
                s << r.get<double>();
                first = false;
            }
            rates_str = s.str();
        }
        if (j.contains("methods") && !args.o_methods->count()) {
            std::ostringstream s;
            bool first = true;
            for (const json& m : j.at("methods")) {
                if (!first) s << ',';
                s << m.get<std::string>();
                first = false;
            }
            methods_str = s.str();
        }
    }

    std::vector<double> rates;
    for (const std::string& r : split_list(rates_str)) {
        const double v = std::stod(r);
        if (!(v > 0.0 && v <= 1.0))
            throw std::invalid_argument("label rate must be in (0, 1]: " + r);
        rates.push_back(v);
    }
    if (rates.empty()) throw std::invalid_argument("no label rates given");

    std::vector<Method> methods;
    for (const std::string& name : split_list(methods_str)) {
        auto m = parse_method(name);
        if (!m)
            throw std::invalid_argument(
                "unknown method '" + name +
                "' (expected ctow, ctow-np, ctow-nt, gbdt-only, tsvm-only)");
        methods.push_back(*m);
    }
    if (methods.empty()) throw std::invalid_argument("no methods given");

    Dataset ds = load_csv(args.common.data, args.common.label_col);
    validate_dataset(ds);
    if (!ds.fully_labeled())
        throw std::invalid_argument("cross-validation needs a label on every row");

    RunManifest manifest;
    manifest.config = config;
    manifest.dataset = fingerprint(ds, args.common.data, args.common.label_col);
    manifest.folds = folds;
    manifest.label_rates = rates;
    manifest.methods = methods;
    manifest.toolkit_version = kToolkitVersion;

    std::cout << manifest_to_json(manifest).dump(2) << "\n";

    std::vector<CvReport> results;
    for (double rate : rates) {
        for (Method method : methods) {
            CvReport r = cross_validate(ds, config, folds, rate, method);
            std::cout << method_name(method) << " label_rate=" << format_double(rate)
                      << " mean_accuracy=" << format_double(r.mean_accuracy)
                      << " std=" << format_double(r.std_accuracy) << " ("
                      << format_double(r.wall_time_seconds) << "s)\n";
            results.push_back(std::move(r));
        }
    }

    write_file_atomic(args.out, report_to_json(manifest, results).dump(2) + "\n");
    const std::string csv_path = csv_sibling(args.out);
    write_file_atomic(csv_path, report_csv(manifest, results));
    std::cout << "report: " << args.out << "\ncsv: " << csv_path << "\n";
    return 0;
}

struct DiversityArgs {
    CommonArgs common;
    double label_rate = 0.1;
    int folds = 5;
    std::string gbdt_seeds;
    std::string out = "diversity.json";
};

int cmd_diversity(const DiversityArgs& args) {
    CotrainConfig config = make_config(args.common);
    Dataset ds = load_csv(args.common.data, args.common.label_col);
    validate_dataset(ds);
    if (!ds.fully_labeled())
        throw std::invalid_argument("diversity analysis needs a label on every row");

    std::vector<std::uint64_t> seeds{derive_seed(config.seed, 0x41), derive_seed(config.seed, 0x42)};
    if (!args.gbdt_seeds.empty()) {
        const auto parts = split_list(args.gbdt_seeds);
        if (parts.size() != 2)
            throw std::invalid_argument("--gbdt-seeds expects exactly two comma-separated seeds");
        seeds = {std::stoull(parts[0]), std::stoull(parts[1])};
    }

    const SplitPlan split = stratified_split(ds, args.label_rate, args.folds, 0, config.seed);
    const Matrix xl = take_rows(ds.features, split.labeled_ids);
    std::vector<int> yl;
    for (int id : split.labeled_ids) yl.push_back(ds.labels[static_cast<std::size_t>(id)]);
    const Matrix xu = take_rows(ds.features, split.unlabeled_ids);
    const Matrix test_x = take_rows(ds.features, split.test_ids);
    std::vector<int> test_y;
    for (int id : split.test_ids) test_y.push_back(ds.labels[static_cast<std::size_t>(id)]);

    std::vector<std::vector<int>> tree_preds;
    std::vector<double> tree_acc;
    for (std::uint64_t s : seeds) {
        Rng rng(s);
        const std::vector<int> rows = bootstrap_sample(yl, rng);
        Matrix bx = take_rows(xl, rows);
        std::vector<int> by;
        for (int r : rows) by.push_back(yl[static_cast<std::size_t>(r)]);
        GbdtModel model = train_gbdt(bx, by, ds.class_count, config.gbdt, s);
        tree_preds.push_back(argmax_rows(predict_proba_gbdt(model, test_x)));
        tree_acc.push_back(accuracy(tree_preds.back(), test_y));
    }

    TsvmConfig tc = config.tsvm;
    tc.seed = derive_seed(config.seed, 0x43);
    TsvmModel svm = train_tsvm(xl, yl, ds.class_count, xu, tc);
    const std::vector<int> svm_preds = argmax_rows(predict_proba_tsvm(svm, test_x));
    const double svm_acc = accuracy(svm_preds, test_y);

    const ContingencyTable tt = contingency(tree_preds[0], tree_preds[1], test_y);
    const ContingencyTable sx = contingency(svm_preds, tree_preds[0], test_y);
    const auto rho_tt = rho(tt);
    const auto rho_sx = rho(sx);

    auto table_json = [](const ContingencyTable& t) {
        return json{{"n11", t.n11}, {"n10", t.n10}, {"n01", t.n01}, {"n00", t.n00}};
    };
    json out{{"format", "ctow-diversity"},
             {"toolkit_version", kToolkitVersion},
             {"dataset",
              json{{"path", args.common.data},
                   {"label_column", args.common.label_col},
                   {"rows", ds.n()},
                   {"cols", ds.dim()},
                   {"content_hash", hash_file(args.common.data)}}},
             {"label_rate", args.label_rate},
             {"folds", args.folds},
             {"seed", config.seed},
             {"gbdt_seeds", seeds},
             {"margin_density", svm.margin_density},
             {"contingency_tt", table_json(tt)},
             {"contingency_sx", table_json(sx)},
             {"accuracy",
              json{{"gbdt_a", tree_acc[0]}, {"gbdt_b", tree_acc[1]}, {"tsvm", svm_acc}}},
             {"test_rows", static_cast<int>(test_y.size())}};
    out["rho_tt"] = rho_tt ? json(*rho_tt) : json(nullptr);
    out["rho_sx"] = rho_sx ? json(*rho_sx) : json(nullptr);

    write_file_atomic(args.out, out.dump(2) + "\n");
    std::cout << out.dump(2) << "\ndiversity report: " << args.out << "\n";
    return 0;
}

struct TrainArgs {
    CommonArgs common;
    std::string out = "model.json";
};

int cmd_train(const TrainArgs& args) {
    CotrainConfig config = make_config(args.common);
    Dataset ds = load_csv(args.common.data, args.common.label_col);
    validate_dataset(ds);

    SplitPlan split;
    split.seed = config.seed;
    for (int i = 0; i < ds.n(); ++i) {
        if (ds.has_label(i))
            split.labeled_ids.push_back(i);
        else
            split.unlabeled_ids.push_back(i);
    }
    if (split.labeled_ids.empty()) throw EmptyDataset("no labeled rows in " + args.common.data);
    split.label_rate =
        static_cast<double>(split.labeled_ids.size()) / static_cast<double>(ds.n());

    CotrainModel model = run_cotraining(ds, split, config);

    std::ostringstream weights;
    for (std::size_t i = 0; i < model.weights.w.size(); ++i) {
        if (i) weights << ", ";
        weights << format_double(model.weights.w[i]);
    }
    std::cout << "labeled rows: " << split.labeled_ids.size()
              << ", unlabeled rows: " << split.unlabeled_ids.size() << "\n"
              << "rounds run: " << model.rounds_run << "\n"
              << "ensemble weights: [" << weights.str() << "]\n";
    if (model.tsvm) std::cout << "margin density: " << format_double(model.tsvm->margin_density) << "\n";

    ModelBundle bundle{std::move(model), ds.feature_names, ds.label_names, args.common.label_col};
    save_model(args.out, bundle);
    std::cout << "model bundle: " << args.out << "\n";
    return 0;
}

struct PredictArgs {
    std::string model_path;
    std::string data;
    std::string out = "predictions.csv";
};

int cmd_predict(const PredictArgs& args) {
    ModelBundle bundle = load_model(args.model_path);

    Dataset ds;
    if (!bundle.label_column.empty()) {
        try {
            ds = load_csv(args.data, bundle.label_column);
        } catch (const UnknownColumn&) {
            ds = load_csv(args.data, std::nullopt);
        }
    } else {
        ds = load_csv(args.data, std::nullopt);
    }

    if (ds.feature_names != bundle.feature_names) {
        std::ostringstream msg;
        msg << "feature columns differ from the trained model (model has "
            << bundle.feature_names.size() << ", input has " << ds.feature_names.size() << ")";
        throw IncompatibleModel(msg.str());
    }

    const ProbMatrix probs = predict_proba_cotrain(bundle.model, ds.features);
    const std::vector<int> labels = argmax_rows(probs);

    std::ostringstream out;
    out << "row,prediction";
    for (const std::string& name : bundle.label_names) out << ",p_" << name;
    out << "\n";
    for (std::size_t i = 0; i < probs.rows(); ++i) {
        out << i << ',' << bundle.label_names[static_cast<std::size_t>(labels[i])];
        for (std::size_t j = 0; j < probs.cols(); ++j) out << ',' << format_double(probs(i, j));
        out << "\n";
    }
    write_file_atomic(args.out, out.str());
    std::cout << probs.rows() << " predictions: " << args.out << "\n";
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"co-training toolkit: boosted-tree ensemble with a transductive SVM and"
                 " entropy-minimizing ensemble weights"};
    app.set_version_flag("--version", kToolkitVersion);
    app.require_subcommand(1);

    RunArgs run_args;
    CLI::App* run = app.add_subcommand("run", "cross-validated experiments on a labeled CSV");
    add_common(run, run_args.common);
    run_args.o_rates =
        run->add_option("--label-rate", run_args.label_rates,
                        "comma-separated labeled fractions of each training fold (default 0.1)");
    run_args.o_folds = run->add_option("--folds", run_args.folds, "fold count (default 5)");
    run_args.o_methods = run->add_option(
        "--method", run_args.methods,
        "comma-separated methods: ctow, ctow-np, ctow-nt, gbdt-only, tsvm-only (default ctow)");
    run->add_option("--out", run_args.out, "report path (default report.json)");

    DiversityArgs div_args;
    CLI::App* diversity =
        app.add_subcommand("diversity", "pairwise agreement analysis of the base learners");
    add_common(diversity, div_args.common);
    diversity->add_option("--label-rate", div_args.label_rate,
                          "labeled fraction of the training fold (default 0.1)");
    diversity->add_option("--folds", div_args.folds, "fold count; fold 0 becomes the test set");
    diversity->add_option("--gbdt-seeds", div_args.gbdt_seeds,
                          "two comma-separated bootstrap seeds for the tree pair");
    diversity->add_option("--out", div_args.out, "output path (default diversity.json)");

    TrainArgs train_args;
    CLI::App* train = app.add_subcommand(
        "train", "train on a CSV whose unlabeled rows have an empty label cell");
    add_common(train, train_args.common);
    train->add_option("--out", train_args.out, "model bundle path (default model.json)");

    PredictArgs predict_args;
    CLI::App* predict = app.add_subcommand("predict", "apply a saved model bundle to a CSV");
    predict->add_option("--model", predict_args.model_path, "model bundle path")->required();
    predict->add_option("--data", predict_args.data, "feature CSV")->required();
    predict->add_option("--out", predict_args.out, "predictions path (default predictions.csv)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        if (run->parsed()) return cmd_run(run_args);
        if (diversity->parsed()) return cmd_diversity(div_args);
        if (train->parsed()) return cmd_train(train_args);
        if (predict->parsed()) return cmd_predict(predict_args);
        std::cerr << "error: no command given\n";
        return 1;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::runtime_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << "\n";
        return 2;
    }
}
