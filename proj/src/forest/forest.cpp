#include <algorithm>
#include <charconv>
#include <cmath>

#include <fmt/format.h>
#include <json.hpp>

#include "forest_internal.hpp"
#include "uab/error.hpp"
#include "uab/forest.hpp"

namespace uab {

namespace {

using nlohmann::ordered_json;

std::vector<std::string> default_feature_names(std::size_t cols) {
    std::vector<std::string> names;
    for (std::size_t c = 0; c < cols; ++c) {
        names.push_back(fmt::format("f{}", c));
    }
    return names;
}

void check_training_input(const FeatureMatrix& x, std::size_t n_targets, const std::vector<std::string>& names) {
    if (x.rows() != n_targets) {
        throw ShapeError(fmt::format("{} feature rows but {} targets", x.rows(), n_targets));
    }
    if (x.rows() < 2) {
        throw DegenerateData(fmt::format("training needs at least 2 samples, got {}", x.rows()));
    }
    if (x.cols() == 0) {
        throw ShapeError("training needs at least one feature column");
    }
    if (names.size() != x.cols()) {
        throw ShapeError(fmt::format("{} feature names for {} columns", names.size(), x.cols()));
    }
    for (std::size_t r = 0; r < x.rows(); ++r) {
        for (double v : x.row(r)) {
            if (!std::isfinite(v)) {
                throw DegenerateData(fmt::format("non-finite feature value in row {}", r));
            }
        }
    }
}

void check_row(const RandomForestModel& model, std::span<const double> x) {
    if (x.size() != model.n_features()) {
        throw ShapeError(fmt::format("model expects {} features, got {}", model.n_features(), x.size()));
    }
}

const char* task_name(ForestTask task) { return task == ForestTask::regression ? "regression" : "classification"; }

}  // namespace

FeatureMatrix::FeatureMatrix(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols), data_(rows * cols, 0.0) {}

void FeatureMatrix::append_row(std::span<const double> values) {
    if (rows_ == 0 && cols_ == 0) {
        cols_ = values.size();
    }
    if (values.size() != cols_) {
        throw ShapeError(fmt::format("row of {} values appended to a {}-column matrix", values.size(), cols_));
    }
    data_.insert(data_.end(), values.begin(), values.end());
    ++rows_;
}

FeatureMatrix FeatureMatrix::select_rows(std::span<const std::size_t> indices) const {
    FeatureMatrix out(indices.size(), cols_);
    for (std::size_t i = 0; i < indices.size(); ++i) {
        std::copy_n(data_.begin() + static_cast<std::ptrdiff_t>(indices[i] * cols_), cols_,
                    out.data_.begin() + static_cast<std::ptrdiff_t>(i * cols_));
    }
    return out;
}

int FeatureSubset::resolve(int n_features) const {
    int k = n_features;
    switch (kind) {
        case Kind::sqrt:
            k = static_cast<int>(std::floor(std::sqrt(static_cast<double>(n_features))));
            break;
        case Kind::third:
            k = n_features / 3;
            break;
        case Kind::all:
            break;
        case Kind::fixed:
            k = std::min(this->k, n_features);
            break;
    }
    return std::max(k, 1);
}

std::string FeatureSubset::to_string() const {
    switch (kind) {
        case Kind::sqrt:
            return "sqrt";
        case Kind::third:
            return "third";
        case Kind::all:
            return "all";
        case Kind::fixed:
            break;
    }
    return std::to_string(k);
}

FeatureSubset FeatureSubset::parse(std::string_view text) {
    if (text == "sqrt") {
        return {Kind::sqrt, 0};
    }
    if (text == "third") {
        return {Kind::third, 0};
    }
    if (text == "all") {
        return {Kind::all, 0};
    }
    int k = 0;
    const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), k);
    if (ec != std::errc() || ptr != text.data() + text.size() || k < 1) {
        throw ConfigError(fmt::format("features_per_split must be sqrt, third, all or a positive integer, got \"{}\"",
                                      text));
    }
    return {Kind::fixed, k};
}

FeatureSubset ForestConfig::subset_for(ForestTask task) const {
    if (features_per_split) {
        return *features_per_split;
    }
    return {task == ForestTask::classification ? FeatureSubset::Kind::sqrt : FeatureSubset::Kind::third, 0};
}

void ForestConfig::validate() const {
    if (n_trees < 1) {
        throw ConfigError(fmt::format("n_trees must be >= 1, got {}", n_trees));
    }
    if (min_samples_leaf < 1) {
        throw ConfigError(fmt::format("min_samples_leaf must be >= 1, got {}", min_samples_leaf));
    }
    if (max_depth && *max_depth < 0) {
        throw ConfigError(fmt::format("max_depth must be >= 0, got {}", *max_depth));
    }
    if (jobs < 1) {
        throw ConfigError(fmt::format("jobs must be >= 1, got {}", jobs));
    }
}

RandomForestModel train_regressor(const FeatureMatrix& x, std::span<const double> y, const ForestConfig& cfg,
                                  std::vector<std::string> feature_names) {
    cfg.validate();
    if (feature_names.empty()) {
        feature_names = default_feature_names(x.cols());
    }
    check_training_input(x, y.size(), feature_names);
    for (double v : y) {
        if (!std::isfinite(v)) {
            throw DegenerateData("non-finite regression target");
        }
    }
    RandomForestModel model;
    model.task = ForestTask::regression;
    model.feature_names = std::move(feature_names);
    model.config = cfg;
    const TrainingTargets targets{y, {}, 0};
    model.trees = grow_forest(x, targets, cfg, cfg.subset_for(model.task).resolve(static_cast<int>(x.cols())));
    return model;
}

RandomForestModel train_classifier(const FeatureMatrix& x, std::span<const int> y, std::vector<std::string> classes,
                                   const ForestConfig& cfg, std::vector<std::string> feature_names) {
    cfg.validate();
    if (feature_names.empty()) {
        feature_names = default_feature_names(x.cols());
    }
    check_training_input(x, y.size(), feature_names);
    if (classes.empty()) {
        throw ShapeError("classification needs at least one class");
    }
    for (int label : y) {
        if (label < 0 || static_cast<std::size_t>(label) >= classes.size()) {
            throw ShapeError(fmt::format("label {} outside the {} classes", label, classes.size()));
        }
    }
    RandomForestModel model;
    model.task = ForestTask::classification;
    model.feature_names = std::move(feature_names);
    model.classes = std::move(classes);
    model.config = cfg;
    const TrainingTargets targets{{}, y, static_cast<int>(model.classes.size())};
    model.trees = grow_forest(x, targets, cfg, cfg.subset_for(model.task).resolve(static_cast<int>(x.cols())));
    return model;
}

std::vector<int> vote_counts(const RandomForestModel& model, std::span<const double> x) {
    check_row(model, x);
    if (model.task != ForestTask::classification) {
        throw ShapeError("vote counts exist only for classification forests");
    }
    std::vector<int> votes(model.classes.size(), 0);
    for (const auto& tree : model.trees) {
        votes[static_cast<std::size_t>(tree.predict(x))] += 1;
    }
    return votes;
}

double predict(const RandomForestModel& model, std::span<const double> x) {
    check_row(model, x);
    if (model.task == ForestTask::classification) {
        const auto votes = vote_counts(model, x);
        return static_cast<double>(std::max_element(votes.begin(), votes.end()) - votes.begin());
    }
    double sum = 0.0;
    for (const auto& tree : model.trees) {
        sum += tree.predict(x);
    }
    return sum / static_cast<double>(model.trees.size());
}

std::string model_to_json(const RandomForestModel& model) {
    const auto& c = model.config;
    ordered_json cfg = {{"n_trees", c.n_trees},
                        {"max_depth", c.max_depth ? ordered_json(*c.max_depth) : ordered_json(nullptr)},
                        {"min_samples_leaf", c.min_samples_leaf},
                        {"features_per_split", c.subset_for(model.task).to_string()},
                        {"bootstrap", c.bootstrap},
                        {"seed", c.seed}};
    ordered_json trees = ordered_json::array();
    for (const auto& t : model.trees) {
        ordered_json tree = {{"feature", t.feature},
                             {"threshold", t.threshold},
                             {"left", t.left},
                             {"right", t.right},
                             {"value", t.value}};
        if (model.task == ForestTask::classification) {
            tree["histogram"] = t.histogram;
        }
        trees.push_back(std::move(tree));
    }
    ordered_json doc = {{"task", task_name(model.task)},
                        {"feature_names", model.feature_names},
                        {"classes", model.classes},
                        {"config", std::move(cfg)},
                        {"trees", std::move(trees)}};
    return doc.dump() + "\n";
}

RandomForestModel model_from_json(std::string_view text) {
    RandomForestModel model;
    try {
        const auto doc = ordered_json::parse(text);
        const std::string task = doc.at("task").get<std::string>();
        if (task == "regression") {
            model.task = ForestTask::regression;
        } else if (task == "classification") {
            model.task = ForestTask::classification;
        } else {
            throw FormatError(fmt::format("unknown forest task \"{}\"", task));
        }
        model.feature_names = doc.at("feature_names").get<std::vector<std::string>>();
        model.classes = doc.at("classes").get<std::vector<std::string>>();
        const auto& cfg = doc.at("config");
        model.config.n_trees = cfg.at("n_trees").get<int>();
        if (!cfg.at("max_depth").is_null()) {
            model.config.max_depth = cfg.at("max_depth").get<int>();
        }
        model.config.min_samples_leaf = cfg.at("min_samples_leaf").get<int>();
        model.config.features_per_split = FeatureSubset::parse(cfg.at("features_per_split").get<std::string>());
        model.config.bootstrap = cfg.at("bootstrap").get<bool>();
        model.config.seed = cfg.at("seed").get<std::uint64_t>();
        for (const auto& jt : doc.at("trees")) {
            DecisionTree t;
            t.feature = jt.at("feature").get<std::vector<int>>();
            t.threshold = jt.at("threshold").get<std::vector<double>>();
            t.left = jt.at("left").get<std::vector<int>>();
            t.right = jt.at("right").get<std::vector<int>>();
            t.value = jt.at("value").get<std::vector<double>>();
            if (jt.contains("histogram")) {
                t.histogram = jt.at("histogram").get<std::vector<std::vector<double>>>();
            } else {
                t.histogram.resize(t.feature.size());
            }
            model.trees.push_back(std::move(t));
        }
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(fmt::format("malformed model JSON: {}", e.what()));
    } catch (const ConfigError& e) {
        throw FormatError(fmt::format("malformed model JSON: {}", e.what()));
    }

    if (model.trees.empty()) {
        throw FormatError("model has no trees");
    }
    const auto nf = static_cast<int>(model.feature_names.size());
    for (std::size_t ti = 0; ti < model.trees.size(); ++ti) {
        const auto& t = model.trees[ti];
        const std::size_t n = t.feature.size();
        if (n == 0 || t.threshold.size() != n || t.left.size() != n || t.right.size() != n || t.value.size() != n ||
            t.histogram.size() != n) {
            throw FormatError(fmt::format("tree {}: inconsistent node arrays", ti));
        }
        for (std::size_t i = 0; i < n; ++i) {
            const bool leaf = t.feature[i] < 0;
            if (leaf) {
                if (model.task == ForestTask::classification &&
                    (t.value[i] < 0 || t.value[i] >= static_cast<double>(model.classes.size()))) {
                    throw FormatError(fmt::format("tree {} node {}: class index out of range", ti, i));
                }
                continue;
            }
            // Children strictly after the parent: no cycles, every node reachable once.
            if (t.feature[i] >= nf || !std::isfinite(t.threshold[i]) || t.left[i] <= static_cast<int>(i) ||
                t.right[i] <= static_cast<int>(i) || t.left[i] >= static_cast<int>(n) ||
                t.right[i] >= static_cast<int>(n)) {
                throw FormatError(fmt::format("tree {} node {}: invalid split", ti, i));
            }
        }
    }
    return model;
}

}  // namespace uab
