#include "ctow/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <unordered_map>

#include "ctow/errors.hpp"
#include "ctow/random.hpp"

namespace ctow {

namespace {

constexpr int kMaxLabelValues = 1000;

std::string trim(const std::string& s) {
    std::size_t b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    std::size_t e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

std::vector<std::string> split_fields(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    for (char ch : line) {
        if (ch == ',') {
            out.push_back(trim(cur));
            cur.clear();
        } else {
            cur.push_back(ch);
        }
    }
    out.push_back(trim(cur));
    return out;
}

double parse_number(const std::string& cell, std::size_t line_no, const std::string& col) {
    const char* first = cell.data();
    const char* last = cell.data() + cell.size();
    if (first != last && *first == '+') ++first;
    double value = 0.0;
    auto [ptr, ec] = std::from_chars(first, last, value, std::chars_format::general);
    if (ec != std::errc() || ptr != last) {
        std::ostringstream msg;
        msg << "line " << line_no << ", column '" << col << "': cannot parse '" << cell
            << "' as a number";
        throw MalformedCsv(msg.str());
    }
    if (!std::isfinite(value)) {
        std::ostringstream msg;
        msg << "line " << line_no << ", column '" << col << "': non-finite value '" << cell << "'";
        throw MalformedCsv(msg.str());
    }
    return value;
}

} // namespace

bool Dataset::fully_labeled() const {
    return std::all_of(labels.begin(), labels.end(), [](int l) { return l != kNoLabel; });
}

void validate_dataset(const Dataset& ds) {
    if (ds.n() < 1 || ds.dim() < 1) throw EmptyDataset("dataset needs at least one row and one feature");
    if (ds.labels.size() != static_cast<std::size_t>(ds.n()))
        throw DimensionMismatch("label count does not match row count");
    for (double v : ds.features.data())
        if (!std::isfinite(v)) throw MalformedCsv("non-finite feature value");
    for (int l : ds.labels)
        if (l != Dataset::kNoLabel && (l < 0 || l >= ds.class_count))
            throw DimensionMismatch("label out of range");
}

Dataset load_csv(const std::string& path, const std::optional<std::string>& label_column) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw MalformedCsv("cannot open file: " + path);

    std::string header_line;
    if (!std::getline(in, header_line)) throw EmptyDataset("empty file: " + path);
    std::vector<std::string> header = split_fields(header_line);

    int label_idx = -1;
    if (label_column) {
        for (std::size_t i = 0; i < header.size(); ++i)
            if (header[i] == *label_column) label_idx = static_cast<int>(i);
        if (label_idx < 0) throw UnknownColumn("no column named '" + *label_column + "' in " + path);
    }

    Dataset ds;
    for (std::size_t i = 0; i < header.size(); ++i)
        if (static_cast<int>(i) != label_idx) ds.feature_names.push_back(header[i]);
    if (ds.feature_names.empty()) throw EmptyDataset("no feature columns in " + path);

    std::unordered_map<std::string, int> label_map;
    std::vector<double> values;
    std::string line;
    std::size_t line_no = 1;
    std::size_t row_count = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        std::vector<std::string> cells = split_fields(line);
        if (cells.size() != header.size()) {
            std::ostringstream msg;
            msg << "line " << line_no << ": expected " << header.size() << " cells, got "
                << cells.size();
            throw MalformedCsv(msg.str());
        }
        int label = Dataset::kNoLabel;
        for (std::size_t i = 0; i < cells.size(); ++i) {
            if (static_cast<int>(i) == label_idx) {
                if (cells[i].empty()) continue;  // unlabeled row
                auto it = label_map.find(cells[i]);
                if (it == label_map.end()) {
                    if (static_cast<int>(label_map.size()) >= kMaxLabelValues)
                        throw MalformedCsv("label column has more than 1000 distinct values");
                    int idx = static_cast<int>(label_map.size());
                    label_map.emplace(cells[i], idx);
                    ds.label_names.push_back(cells[i]);
                    label = idx;
                } else {
                    label = it->second;
                }
            } else {
                if (cells[i].empty()) {
                    std::ostringstream msg;
                    msg << "line " << line_no << ": missing value in column '" << header[i] << "'";
                    throw MalformedCsv(msg.str());
                }
                values.push_back(parse_number(cells[i], line_no, header[i]));
            }
        }
        ds.labels.push_back(label);
        ++row_count;
    }
    if (row_count == 0) throw EmptyDataset("no data rows in " + path);

    const std::size_t d = ds.feature_names.size();
    ds.features = Matrix(row_count, d);
    std::copy(values.begin(), values.end(), ds.features.data().begin());
    ds.class_count = static_cast<int>(ds.label_names.size());
    validate_dataset(ds);
    return ds;
}

SplitPlan stratified_split(const Dataset& ds, double label_rate, int folds, int fold_index,
                           std::uint64_t seed) {
    if (!ds.fully_labeled())
        throw std::invalid_argument("stratified_split: dataset must be fully labeled");
    if (folds < 2) throw std::invalid_argument("stratified_split: folds must be >= 2");
    if (!(label_rate > 0.0) || label_rate > 1.0)
        throw std::invalid_argument("stratified_split: label rate must be in (0, 1]");
    if (fold_index < 0 || fold_index >= folds)
        throw BadFoldIndex("fold index " + std::to_string(fold_index) + " not in [0, " +
                           std::to_string(folds) + ")");

    std::vector<std::vector<int>> by_class(static_cast<std::size_t>(ds.class_count));
    for (int i = 0; i < ds.n(); ++i)
        by_class[static_cast<std::size_t>(ds.labels[static_cast<std::size_t>(i)])].push_back(i);
    for (int c = 0; c < ds.class_count; ++c) {
        if (static_cast<int>(by_class[static_cast<std::size_t>(c)].size()) < folds)
            throw ClassTooSmall("class " + std::to_string(c) + " has fewer rows than folds");
    }

    SplitPlan plan;
    plan.label_rate = label_rate;
    plan.seed = seed;

    Rng rng(derive_seed(seed, 0xf01d));
    for (auto& rows : by_class) {
        rng.shuffle(rows);
        // contiguous chunks per fold, remainders on the first folds
        const int sz = static_cast<int>(rows.size());
        const int base = sz / folds;
        const int extra = sz % folds;
        int cursor = 0;
        std::vector<int> training;
        for (int f = 0; f < folds; ++f) {
            int len = base + (f < extra ? 1 : 0);
            for (int i = 0; i < len; ++i) {
                int row = rows[static_cast<std::size_t>(cursor + i)];
                if (f == fold_index) plan.test_ids.push_back(row);
                else training.push_back(row);
            }
            cursor += len;
        }
        const int train_sz = static_cast<int>(training.size());
        int labeled = static_cast<int>(std::ceil(label_rate * train_sz));
        labeled = std::clamp(labeled, 1, train_sz);
        for (int i = 0; i < train_sz; ++i) {
            if (i < labeled) plan.labeled_ids.push_back(training[static_cast<std::size_t>(i)]);
            else plan.unlabeled_ids.push_back(training[static_cast<std::size_t>(i)]);
        }
    }

    std::sort(plan.labeled_ids.begin(), plan.labeled_ids.end());
    std::sort(plan.unlabeled_ids.begin(), plan.unlabeled_ids.end());
    std::sort(plan.test_ids.begin(), plan.test_ids.end());
    return plan;
}

} // namespace ctow
