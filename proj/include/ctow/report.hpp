#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "json.hpp"

#include "ctow/cotrain.hpp"
#include "ctow/metrics.hpp"

namespace ctow {

// FNV-1a 64-bit content hash, rendered as 16 hex digits.
std::string fnv1a64_hex(const std::string& bytes);
std::string hash_file(const std::string& path);  // throws std::runtime_error if unreadable

// Write to a sibling temp file, then rename over the target.
void write_file_atomic(const std::string& path, const std::string& content);

nlohmann::json config_to_json(const CotrainConfig& config);
CotrainConfig config_from_json(const nlohmann::json& j);

nlohmann::json round_record_to_json(const RoundRecord& record);
RoundRecord round_record_from_json(const nlohmann::json& j);

struct DatasetFingerprint {
    std::string path;
    std::string label_column;
    int rows = 0;
    int cols = 0;  // feature columns
    std::string content_hash;

    bool operator==(const DatasetFingerprint&) const = default;
};

// Everything needed to reproduce a run: same binary + same manifest gives a
// byte-identical report.
struct RunManifest {
    CotrainConfig config;  // fully resolved, defaults included
    DatasetFingerprint dataset;
    int folds = 5;
    std::vector<double> label_rates;
    std::vector<Method> methods;
    std::string toolkit_version;
};

nlohmann::json manifest_to_json(const RunManifest& manifest);
RunManifest manifest_from_json(const nlohmann::json& j);

// Deterministic experiment report: manifest echo plus one block per
// (method, label rate). Wall times stay out of the JSON so reruns match
// byte for byte; the CSV carries them instead.
nlohmann::json report_to_json(const RunManifest& manifest, const std::vector<CvReport>& results);

// Flat rows: dataset,method,label_rate,mean_accuracy,std_accuracy,wall_time_s
std::string report_csv(const RunManifest& manifest, const std::vector<CvReport>& results);

} // namespace ctow
