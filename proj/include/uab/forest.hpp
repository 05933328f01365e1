#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "uab/evalmetrics.hpp"

namespace uab {

/// Row-major samples x features. NaN marks a missing value.
class FeatureMatrix {
public:
    FeatureMatrix() = default;
    FeatureMatrix(std::size_t rows, std::size_t cols);

    [[nodiscard]] std::size_t rows() const noexcept { return rows_; }
    [[nodiscard]] std::size_t cols() const noexcept { return cols_; }
    [[nodiscard]] double& at(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
    [[nodiscard]] double at(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }
    [[nodiscard]] std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }
    void append_row(std::span<const double> values);
    [[nodiscard]] FeatureMatrix select_rows(std::span<const std::size_t> indices) const;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

enum class ForestTask { regression, classification };

struct FeatureSubset {
    enum class Kind { sqrt, third, all, fixed };
    Kind kind = Kind::sqrt;
    int k = 0;  // fixed only

    /// floor(sqrt(p)), floor(p/3), p or min(k, p); at least 1.
    [[nodiscard]] int resolve(int n_features) const;
    [[nodiscard]] std::string to_string() const;
    /// "sqrt", "third", "all" or a positive integer; ConfigError otherwise.
    [[nodiscard]] static FeatureSubset parse(std::string_view text);
};

struct ForestConfig {
    int n_trees = 100;
    std::optional<int> max_depth;  // unlimited when empty
    int min_samples_leaf = 1;
    /// Empty: sqrt for classification, third for regression.
    std::optional<FeatureSubset> features_per_split;
    bool bootstrap = true;
    std::uint64_t seed = 0;
    int jobs = 1;  // worker threads; results do not depend on it

    [[nodiscard]] FeatureSubset subset_for(ForestTask task) const;
    /// Throws ConfigError for n_trees < 1, min_samples_leaf < 1, max_depth < 0 or jobs < 1.
    void validate() const;
};

/// Flat CART tree. Node 0 is the root; children always follow their parent.
/// Internal nodes route x[feature] <= threshold to `left`.
struct DecisionTree {
    std::vector<int> feature;         // -1 at leaves
    std::vector<double> threshold;    // 0 at leaves
    std::vector<int> left;            // -1 at leaves
    std::vector<int> right;           // -1 at leaves
    std::vector<double> value;        // leaf mean (regression) or majority class index
    std::vector<std::vector<double>> histogram;  // classification leaves: training class counts

    [[nodiscard]] std::size_t node_count() const noexcept { return feature.size(); }
    [[nodiscard]] int leaf_for(std::span<const double> x) const;
    [[nodiscard]] double predict(std::span<const double> x) const { return value[static_cast<std::size_t>(leaf_for(x))]; }
};

struct RandomForestModel {
    ForestTask task = ForestTask::regression;
    std::vector<std::string> feature_names;
    std::vector<std::string> classes;  // classification only
    ForestConfig config;
    std::vector<DecisionTree> trees;

    [[nodiscard]] std::size_t n_features() const noexcept { return feature_names.size(); }
};

/// Regression forest on MSE splits. Throws DegenerateData for fewer than two
/// samples or non-finite inputs, ShapeError on size mismatch.
[[nodiscard]] RandomForestModel train_regressor(const FeatureMatrix& x, std::span<const double> y,
                                                const ForestConfig& cfg, std::vector<std::string> feature_names = {});

/// Classification forest on Gini splits; labels index `classes`.
[[nodiscard]] RandomForestModel train_classifier(const FeatureMatrix& x, std::span<const int> y,
                                                 std::vector<std::string> classes, const ForestConfig& cfg,
                                                 std::vector<std::string> feature_names = {});

/// Regression: mean of tree outputs. Classification: majority vote as a
/// class index, ties to the lowest index. ShapeError on a wrong row length.
[[nodiscard]] double predict(const RandomForestModel& model, std::span<const double> x);
/// Per-class tree votes; sums to the tree count.
[[nodiscard]] std::vector<int> vote_counts(const RandomForestModel& model, std::span<const double> x);

[[nodiscard]] std::string model_to_json(const RandomForestModel& model);
/// Throws FormatError on malformed or structurally invalid trees.
[[nodiscard]] RandomForestModel model_from_json(std::string_view text);

/// Column medians over finite values (0 for an all-missing column).
[[nodiscard]] std::vector<double> column_medians(const FeatureMatrix& x);
/// Replaces NaN with the given per-column values.
void impute(FeatureMatrix& x, std::span<const double> fill);

/// Fold of each sample: ids sorted, shuffled by the seed, then position mod k.
/// Independent of input order. TooFewSamples when ids.size() < k or k < 2.
[[nodiscard]] std::vector<int> assign_folds(std::span<const std::string> ids, int k, std::uint64_t seed);
/// As assign_folds over distinct groups; every sample takes its group's fold.
[[nodiscard]] std::vector<int> assign_group_folds(std::span<const std::string> groups, int k, std::uint64_t seed);

struct CvPrediction {
    std::string id;
    std::string group;  // equals id for ungrouped runs
    double truth = 0.0;
    double prediction = 0.0;
    int fold = 0;
};

struct CvResult {
    int k = 0;
    ForestTask task = ForestTask::regression;
    std::vector<std::string> classes;
    std::vector<CvPrediction> predictions;  // one per sample, sorted by id
    std::optional<CorrelationTriple> correlation;       // regression
    std::optional<double> rmse;                         // regression
    std::optional<ClassificationReport> report;         // classification
    std::optional<double> image_accuracy;               // grouped classification: per-group majority vote
    std::size_t groups = 0;
};

/// k-fold regression CV. Missing values are imputed with training-fold
/// medians; fold f trains with seed derive_seed(cfg.seed, f).
[[nodiscard]] CvResult cross_validate(std::span<const std::string> ids, const FeatureMatrix& x,
                                      std::span<const double> y, const ForestConfig& cfg, int k = 10);

/// Grouped k-fold classification CV (all samples of one group share a fold)
/// plus per-group majority-vote accuracy.
[[nodiscard]] CvResult detect_baseline(std::span<const std::string> ids, std::span<const std::string> groups,
                                       const FeatureMatrix& x, std::span<const int> labels,
                                       std::vector<std::string> classes, const ForestConfig& cfg, int k = 10);

/// Regression: stimulus_id,truth_mos,pred_mos,fold. Classification:
/// patch_id,stimulus_id,truth,pred,fold with class names. Both are accepted by
/// the evaluator unchanged.
[[nodiscard]] std::string cv_predictions_to_csv(const CvResult& result);
[[nodiscard]] std::string cv_metrics_to_json(const CvResult& result);

}  // namespace uab
