#include "ctow/model_io.hpp"

#include <fstream>

#include "ctow/errors.hpp"
#include "ctow/report.hpp"
#include "ctow/version.hpp"

namespace ctow {

namespace {

using nlohmann::json;

json tree_to_json(const Tree& tree) {
    json nodes = json::array();
    for (const TreeNode& n : tree) {
        nodes.push_back(json{{"f", n.feature},
                             {"t", n.threshold},
                             {"l", n.left},
                             {"r", n.right},
                             {"w", n.weight}});
    }
    return nodes;
}

Tree tree_from_json(const json& nodes) {
    Tree tree;
    for (const json& n : nodes) {
        TreeNode node;
        node.feature = n.at("f").get<int>();
        node.threshold = n.at("t").get<double>();
        node.left = n.at("l").get<int>();
        node.right = n.at("r").get<int>();
        node.weight = n.at("w").get<double>();
        tree.push_back(node);
    }
    return tree;
}

json gbdt_to_json(const GbdtModel& m) {
    json trees = json::array();
    for (const auto& per_class : m.trees) {
        json rounds = json::array();
        for (const Tree& t : per_class) rounds.push_back(tree_to_json(t));
        trees.push_back(std::move(rounds));
    }
    return json{{"rounds", m.config.rounds},
                {"max_depth", m.config.max_depth},
                {"learning_rate", m.config.learning_rate},
                {"l2_reg", m.config.l2_reg},
                {"min_child_weight", m.config.min_child_weight},
                {"class_count", m.class_count},
                {"feature_count", m.feature_count},
                {"degenerate", m.degenerate},
                {"degenerate_class", m.degenerate_class},
                {"train_loss", m.train_loss},
                {"trees", std::move(trees)}};
}

GbdtModel gbdt_from_json(const json& j) {
    GbdtModel m;
    m.config.rounds = j.at("rounds").get<int>();
    m.config.max_depth = j.at("max_depth").get<int>();
    m.config.learning_rate = j.at("learning_rate").get<double>();
    m.config.l2_reg = j.at("l2_reg").get<double>();
    m.config.min_child_weight = j.at("min_child_weight").get<double>();
    m.class_count = j.at("class_count").get<int>();
    m.feature_count = j.at("feature_count").get<int>();
    m.degenerate = j.at("degenerate").get<bool>();
    m.degenerate_class = j.at("degenerate_class").get<int>();
    m.train_loss = j.at("train_loss").get<std::vector<double>>();
    for (const json& per_class : j.at("trees")) {
        std::vector<Tree> rounds;
        for (const json& t : per_class) rounds.push_back(tree_from_json(t));
        m.trees.push_back(std::move(rounds));
    }
    return m;
}

json tsvm_to_json(const TsvmModel& m) {
    json per_class = json::array();
    for (const LinearBinary& lb : m.per_class)
        per_class.push_back(json{{"w", lb.w}, {"b", lb.b}});
    return json{{"per_class", std::move(per_class)},
                {"c_labeled", m.c_labeled},
                {"c_unlabeled", m.c_unlabeled},
                {"temperature", m.temperature},
                {"margin_density", m.margin_density},
                {"class_count", m.class_count},
                {"feature_count", m.feature_count}};
}

TsvmModel tsvm_from_json(const json& j) {
    TsvmModel m;
    for (const json& lb : j.at("per_class")) {
        LinearBinary bin;
        bin.w = lb.at("w").get<std::vector<double>>();
        bin.b = lb.at("b").get<double>();
        m.per_class.push_back(std::move(bin));
    }
    m.c_labeled = j.at("c_labeled").get<double>();
    m.c_unlabeled = j.at("c_unlabeled").get<double>();
    m.temperature = j.at("temperature").get<double>();
    m.margin_density = j.at("margin_density").get<double>();
    m.class_count = j.at("class_count").get<int>();
    m.feature_count = j.at("feature_count").get<int>();
    return m;
}

json history_to_json(const std::vector<RoundRecord>& history) {
    json out = json::array();
    for (const RoundRecord& r : history) out.push_back(round_record_to_json(r));
    return out;
}

std::vector<RoundRecord> history_from_json(const json& j) {
    std::vector<RoundRecord> out;
    for (const json& rec : j) out.push_back(round_record_from_json(rec));
    return out;
}

} // namespace

json model_to_json(const ModelBundle& bundle) {
    const CotrainModel& m = bundle.model;
    json gbdts = json::array();
    for (const GbdtModel& g : m.gbdts) gbdts.push_back(gbdt_to_json(g));

    json j{{"format", "ctow-model"},
           {"toolkit_version", kToolkitVersion},
           {"class_count", m.class_count},
           {"feature_count", m.feature_count},
           {"feature_names", bundle.feature_names},
           {"label_names", bundle.label_names},
           {"label_column", bundle.label_column},
           {"config", config_to_json(m.config)},
           {"gbdts", std::move(gbdts)},
           {"rounds_run", m.rounds_run},
           {"history", history_to_json(m.history)}};
    j["tsvm"] = m.tsvm ? tsvm_to_json(*m.tsvm) : json(nullptr);
    j["weights"] = json{{"w", m.weights.w}};
    j["weights"]["fixed_last"] =
        m.weights.fixed_last ? json(*m.weights.fixed_last) : json(nullptr);
    return j;
}

ModelBundle model_from_json(const json& j) {
    try {
        if (!j.is_object() || j.value("format", "") != "ctow-model")
            throw CorruptBundle("not a ctow model bundle");
        ModelBundle bundle;
        CotrainModel& m = bundle.model;
        m.class_count = j.at("class_count").get<int>();
        m.feature_count = j.at("feature_count").get<int>();
        bundle.feature_names = j.at("feature_names").get<std::vector<std::string>>();
        bundle.label_names = j.at("label_names").get<std::vector<std::string>>();
        bundle.label_column = j.at("label_column").get<std::string>();
        m.config = config_from_json(j.at("config"));
        for (const json& g : j.at("gbdts")) m.gbdts.push_back(gbdt_from_json(g));
        const json& t = j.at("tsvm");
        if (!t.is_null()) m.tsvm = tsvm_from_json(t);
        const json& w = j.at("weights");
        m.weights.w = w.at("w").get<std::vector<double>>();
        if (!w.at("fixed_last").is_null()) m.weights.fixed_last = w.at("fixed_last").get<double>();
        m.rounds_run = j.at("rounds_run").get<int>();
        m.history = history_from_json(j.at("history"));
        check_weight_vector(m.weights);
        return bundle;
    } catch (const CorruptBundle&) {
        throw;
    } catch (const std::exception& e) {
        throw CorruptBundle(std::string("malformed model bundle: ") + e.what());
    }
}

void save_model(const std::string& path, const ModelBundle& bundle) {
    write_file_atomic(path, model_to_json(bundle).dump(2) + "\n");
}

ModelBundle load_model(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw CorruptBundle("cannot open model bundle: " + path);
    json j;
    try {
        in >> j;
    } catch (const std::exception& e) {
        throw CorruptBundle(std::string("model bundle is not valid JSON: ") + e.what());
    }
    return model_from_json(j);
}

} // namespace ctow
