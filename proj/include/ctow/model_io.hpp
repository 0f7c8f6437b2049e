#pragma once

#include <string>
#include <vector>

#include "json.hpp"

#include "ctow/cotrain.hpp"

namespace ctow {

// Trained model plus the column/label vocabulary needed to apply it to a
// fresh CSV.
struct ModelBundle {
    CotrainModel model;
    std::vector<std::string> feature_names;
    std::vector<std::string> label_names;
    std::string label_column;
};

nlohmann::json model_to_json(const ModelBundle& bundle);

// Throws CorruptBundle on missing keys, wrong types, or a foreign format tag.
ModelBundle model_from_json(const nlohmann::json& j);

// Atomic write (temp file + rename), then load with full validation.
// Doubles survive the round trip exactly, so reloaded models predict
// bit-identically.
void save_model(const std::string& path, const ModelBundle& bundle);
ModelBundle load_model(const std::string& path);

} // namespace ctow
