#include "ctow/report.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "ctow/errors.hpp"
#include "ctow/version.hpp"

namespace ctow {

namespace {

using nlohmann::json;

std::string fixed6(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.6f", v);
    return buf;
}

std::string fixed3(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.3f", v);
    return buf;
}

} // namespace

std::string fnv1a64_hex(const std::string& bytes) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

std::string hash_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot read file: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return fnv1a64_hex(buf.str());
}

void write_file_atomic(const std::string& path, const std::string& content) {
    const std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw std::runtime_error("cannot write file: " + tmp);
        out << content;
        out.flush();
        if (!out) throw std::runtime_error("short write: " + tmp);
    }
    if (std::rename(tmp.c_str(), path.c_str()) != 0)
        throw std::runtime_error("cannot move " + tmp + " to " + path);
}

nlohmann::json config_to_json(const CotrainConfig& c) {
    return json{{"k_learners", c.k_learners},
                {"beta", c.beta},
                {"alpha", c.alpha},
                {"mu", c.mu},
                {"t_inner", c.t_inner},
                {"bootstrap_fraction", c.bootstrap_fraction},
                {"max_rounds", c.max_rounds},
                {"seed", c.seed},
                {"use_prior", c.use_prior},
                {"use_tsvm", c.use_tsvm},
                {"normalize_loo", c.normalize_loo},
                {"gbdt",
                 json{{"rounds", c.gbdt.rounds},
                      {"max_depth", c.gbdt.max_depth},
                      {"learning_rate", c.gbdt.learning_rate},
                      {"l2_reg", c.gbdt.l2_reg},
                      {"min_child_weight", c.gbdt.min_child_weight}}},
                {"tsvm",
                 json{{"c_labeled", c.tsvm.c_labeled},
                      {"c_unlabeled", c.tsvm.c_unlabeled},
                      {"temperature", c.tsvm.temperature},
                      {"max_outer", c.tsvm.max_outer},
                      {"epochs", c.tsvm.epochs}}}};
}

CotrainConfig config_from_json(const nlohmann::json& j) {
    CotrainConfig c;
    c.k_learners = j.at("k_learners").get<int>();
    c.beta = j.at("beta").get<double>();
    c.alpha = j.at("alpha").get<double>();
    c.mu = j.at("mu").get<double>();
    c.t_inner = j.at("t_inner").get<int>();
    c.bootstrap_fraction = j.at("bootstrap_fraction").get<double>();
    c.max_rounds = j.at("max_rounds").get<int>();
    c.seed = j.at("seed").get<std::uint64_t>();
    c.use_prior = j.at("use_prior").get<bool>();
    c.use_tsvm = j.at("use_tsvm").get<bool>();
    c.normalize_loo = j.at("normalize_loo").get<bool>();
    const json& g = j.at("gbdt");
    c.gbdt.rounds = g.at("rounds").get<int>();
    c.gbdt.max_depth = g.at("max_depth").get<int>();
    c.gbdt.learning_rate = g.at("learning_rate").get<double>();
    c.gbdt.l2_reg = g.at("l2_reg").get<double>();
    c.gbdt.min_child_weight = g.at("min_child_weight").get<double>();
    const json& t = j.at("tsvm");
    c.tsvm.c_labeled = t.at("c_labeled").get<double>();
    c.tsvm.c_unlabeled = t.at("c_unlabeled").get<double>();
    c.tsvm.temperature = t.at("temperature").get<double>();
    c.tsvm.max_outer = t.at("max_outer").get<int>();
    c.tsvm.epochs = t.at("epochs").get<int>();
    return c;
}

nlohmann::json round_record_to_json(const RoundRecord& r) {
    json rec{{"round", r.round},
             {"weights", r.weights},
             {"objective", r.objective},
             {"batch_sizes", r.batch_sizes}};
    rec["margin_density"] = r.margin_density ? json(*r.margin_density) : json(nullptr);
    return rec;
}

RoundRecord round_record_from_json(const nlohmann::json& rec) {
    RoundRecord r;
    r.round = rec.at("round").get<int>();
    r.weights = rec.at("weights").get<std::vector<double>>();
    r.objective = rec.at("objective").get<double>();
    r.batch_sizes = rec.at("batch_sizes").get<std::vector<int>>();
    const json& md = rec.at("margin_density");
    if (!md.is_null()) r.margin_density = md.get<double>();
    return r;
}

nlohmann::json manifest_to_json(const RunManifest& m) {
    json methods = json::array();
    for (Method method : m.methods) methods.push_back(method_name(method));
    return json{{"config", config_to_json(m.config)},
                {"dataset",
                 json{{"path", m.dataset.path},
                      {"label_column", m.dataset.label_column},
                      {"rows", m.dataset.rows},
                      {"cols", m.dataset.cols},
                      {"content_hash", m.dataset.content_hash}}},
                {"folds", m.folds},
                {"label_rates", m.label_rates},
                {"methods", std::move(methods)},
                {"seed", m.config.seed},
                {"toolkit_version", m.toolkit_version}};
}

RunManifest manifest_from_json(const nlohmann::json& j) {
    RunManifest m;
    m.config = config_from_json(j.at("config"));
    const json& d = j.at("dataset");
    m.dataset.path = d.at("path").get<std::string>();
    m.dataset.label_column = d.at("label_column").get<std::string>();
    m.dataset.rows = d.at("rows").get<int>();
    m.dataset.cols = d.at("cols").get<int>();
    m.dataset.content_hash = d.at("content_hash").get<std::string>();
    m.folds = j.at("folds").get<int>();
    m.label_rates = j.at("label_rates").get<std::vector<double>>();
    for (const json& name : j.at("methods")) {
        auto parsed = parse_method(name.get<std::string>());
        if (!parsed) throw std::runtime_error("unknown method in manifest: " + name.dump());
        m.methods.push_back(*parsed);
    }
    m.toolkit_version = j.at("toolkit_version").get<std::string>();
    return m;
}

nlohmann::json report_to_json(const RunManifest& manifest, const std::vector<CvReport>& results) {
    json blocks = json::array();
    for (const CvReport& r : results) {
        json fold_accuracies = json::array();
        json histories = json::array();
        for (const FoldResult& f : r.fold_results) {
            fold_accuracies.push_back(f.accuracy);
            json rounds = json::array();
            for (const RoundRecord& rec : f.history) rounds.push_back(round_record_to_json(rec));
            histories.push_back(std::move(rounds));
        }
        blocks.push_back(json{{"method", method_name(r.method)},
                              {"label_rate", r.label_rate},
                              {"folds", r.folds},
                              {"fold_accuracies", std::move(fold_accuracies)},
                              {"mean_accuracy", r.mean_accuracy},
                              {"std_accuracy", r.std_accuracy},
                              {"histories", std::move(histories)}});
    }
    return json{{"format", "ctow-report"},
                {"manifest", manifest_to_json(manifest)},
                {"results", std::move(blocks)}};
}

std::string report_csv(const RunManifest& manifest, const std::vector<CvReport>& results) {
    std::ostringstream out;
    out << "dataset,method,label_rate,mean_accuracy,std_accuracy,wall_time_s\n";
    for (const CvReport& r : results) {
        out << manifest.dataset.path << ',' << method_name(r.method) << ','
            << fixed6(r.label_rate) << ',' << fixed6(r.mean_accuracy) << ','
            << fixed6(r.std_accuracy) << ',' << fixed3(r.wall_time_seconds) << '\n';
    }
    return out.str();
}

} // namespace ctow
