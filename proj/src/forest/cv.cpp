#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <set>
#include <sstream>

#include <fmt/format.h>
#include <json.hpp>

#include "uab/csv.hpp"
#include "uab/error.hpp"
#include "uab/forest.hpp"
#include "uab/json_report.hpp"
#include "uab/random.hpp"

namespace uab {

namespace {

using nlohmann::ordered_json;

// Indices ordered by id, ties by position.
std::vector<std::size_t> canonical_order(std::span<const std::string> ids) {
    std::vector<std::size_t> order(ids.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return ids[a] < ids[b]; });
    return order;
}

void check_k(std::size_t units, int k, const char* what) {
    if (k < 2) {
        throw TooFewSamples(fmt::format("cross-validation needs k >= 2, got {}", k));
    }
    if (units < static_cast<std::size_t>(k)) {
        throw TooFewSamples(fmt::format("{} {} cannot fill {} folds", units, what, k));
    }
}

struct FoldSplit {
    std::vector<std::size_t> train;
    std::vector<std::size_t> test;
};

FoldSplit split_fold(std::span<const int> folds, int f) {
    FoldSplit s;
    for (std::size_t i = 0; i < folds.size(); ++i) {
        (folds[i] == f ? s.test : s.train).push_back(i);
    }
    return s;
}

// Training-fold median imputation applied to both sides.
std::pair<FeatureMatrix, FeatureMatrix> fold_matrices(const FeatureMatrix& x, const FoldSplit& s) {
    FeatureMatrix train = x.select_rows(s.train);
    FeatureMatrix test = x.select_rows(s.test);
    const auto fill = column_medians(train);
    impute(train, fill);
    impute(test, fill);
    return {std::move(train), std::move(test)};
}

template <typename T>
std::vector<T> gather(std::span<const T> v, std::span<const std::size_t> idx) {
    std::vector<T> out;
    out.reserve(idx.size());
    for (std::size_t i : idx) {
        out.push_back(v[i]);
    }
    return out;
}

ForestConfig fold_config(const ForestConfig& cfg, int fold) {
    ForestConfig c = cfg;
    c.seed = derive_seed(cfg.seed, static_cast<std::uint64_t>(fold));
    return c;
}

}  // namespace

std::vector<double> column_medians(const FeatureMatrix& x) {
    std::vector<double> out(x.cols(), 0.0);
    std::vector<double> col;
    for (std::size_t c = 0; c < x.cols(); ++c) {
        col.clear();
        for (std::size_t r = 0; r < x.rows(); ++r) {
            if (std::isfinite(x.at(r, c))) {
                col.push_back(x.at(r, c));
            }
        }
        if (col.empty()) {
            continue;
        }
        std::sort(col.begin(), col.end());
        const std::size_t m = col.size() / 2;
        out[c] = col.size() % 2 == 1 ? col[m] : 0.5 * (col[m - 1] + col[m]);
    }
    return out;
}

void impute(FeatureMatrix& x, std::span<const double> fill) {
    if (fill.size() != x.cols()) {
        throw ShapeError(fmt::format("{} fill values for {} columns", fill.size(), x.cols()));
    }
    for (std::size_t r = 0; r < x.rows(); ++r) {
        for (std::size_t c = 0; c < x.cols(); ++c) {
            if (!std::isfinite(x.at(r, c))) {
                x.at(r, c) = fill[c];
            }
        }
    }
}

std::vector<int> assign_folds(std::span<const std::string> ids, int k, std::uint64_t seed) {
    check_k(ids.size(), k, "samples");
    auto order = canonical_order(ids);
    std::mt19937_64 rng(derive_seed(seed, 0xF01D));
    shuffle(std::span<std::size_t>(order), rng);
    std::vector<int> folds(ids.size());
    for (std::size_t pos = 0; pos < order.size(); ++pos) {
        folds[order[pos]] = static_cast<int>(pos % static_cast<std::size_t>(k));
    }
    return folds;
}

std::vector<int> assign_group_folds(std::span<const std::string> groups, int k, std::uint64_t seed) {
    const std::set<std::string> distinct(groups.begin(), groups.end());
    const std::vector<std::string> unique(distinct.begin(), distinct.end());
    const auto group_folds = assign_folds(unique, k, seed);
    std::map<std::string_view, int> fold_of;
    for (std::size_t i = 0; i < unique.size(); ++i) {
        fold_of[unique[i]] = group_folds[i];
    }
    std::vector<int> folds;
    folds.reserve(groups.size());
    for (const auto& g : groups) {
        folds.push_back(fold_of.at(g));
    }
    return folds;
}

CvResult cross_validate(std::span<const std::string> ids, const FeatureMatrix& x, std::span<const double> y,
                        const ForestConfig& cfg, int k) {
    if (ids.size() != x.rows() || y.size() != x.rows()) {
        throw ShapeError(fmt::format("{} ids, {} rows, {} targets", ids.size(), x.rows(), y.size()));
    }
    check_k(ids.size(), k, "samples");
    // Canonical row order makes the run independent of input order.
    const auto order = canonical_order(ids);
    const std::vector<std::string> cids = gather(ids, order);
    const std::vector<double> cy = gather(y, order);
    const FeatureMatrix cx = x.select_rows(order);
    const auto folds = assign_folds(cids, k, cfg.seed);

    CvResult result;
    result.k = k;
    result.task = ForestTask::regression;
    result.groups = cids.size();
    std::vector<double> pred(cids.size(), 0.0);
    for (int f = 0; f < k; ++f) {
        const auto split = split_fold(folds, f);
        auto [train, test] = fold_matrices(cx, split);
        const auto ty = gather(std::span<const double>(cy), split.train);
        const auto model = train_regressor(train, ty, fold_config(cfg, f));
        for (std::size_t i = 0; i < split.test.size(); ++i) {
            pred[split.test[i]] = predict(model, test.row(i));
        }
    }
    double sse = 0.0;
    for (std::size_t i = 0; i < cids.size(); ++i) {
        result.predictions.push_back({cids[i], cids[i], cy[i], pred[i], folds[i]});
        sse += (pred[i] - cy[i]) * (pred[i] - cy[i]);
    }
    result.correlation = correlate(cy, pred);
    result.rmse = std::sqrt(sse / static_cast<double>(cids.size()));
    return result;
}

CvResult detect_baseline(std::span<const std::string> ids, std::span<const std::string> groups, const FeatureMatrix& x,
                         std::span<const int> labels, std::vector<std::string> classes, const ForestConfig& cfg,
                         int k) {
    if (ids.size() != x.rows() || groups.size() != x.rows() || labels.size() != x.rows()) {
        throw ShapeError(fmt::format("{} ids, {} groups, {} rows, {} labels", ids.size(), groups.size(), x.rows(),
                                     labels.size()));
    }
    const auto order = canonical_order(ids);
    const std::vector<std::string> cids = gather(ids, order);
    const std::vector<std::string> cgroups = gather(groups, order);
    const std::vector<int> clabels = gather(labels, order);
    const FeatureMatrix cx = x.select_rows(order);
    const std::set<std::string> distinct(cgroups.begin(), cgroups.end());
    check_k(distinct.size(), k, "groups");
    const auto folds = assign_group_folds(cgroups, k, cfg.seed);

    std::vector<int> pred(cids.size(), 0);
    for (int f = 0; f < k; ++f) {
        const auto split = split_fold(folds, f);
        auto [train, test] = fold_matrices(cx, split);
        const auto ty = gather(std::span<const int>(clabels), split.train);
        const auto model = train_classifier(train, ty, classes, fold_config(cfg, f));
        for (std::size_t i = 0; i < split.test.size(); ++i) {
            pred[split.test[i]] = static_cast<int>(predict(model, test.row(i)));
        }
    }

    CvResult result;
    result.k = k;
    result.task = ForestTask::classification;
    result.groups = distinct.size();
    for (std::size_t i = 0; i < cids.size(); ++i) {
        result.predictions.push_back(
            {cids[i], cgroups[i], static_cast<double>(clabels[i]), static_cast<double>(pred[i]), folds[i]});
    }
    result.report = classification_report(clabels, pred, classes);

    // Per-group majority of predictions (and of truths), lowest index on ties.
    std::map<std::string_view, std::pair<std::vector<int>, std::vector<int>>> votes;
    for (std::size_t i = 0; i < cids.size(); ++i) {
        auto& [t, p] = votes[cgroups[i]];
        t.resize(classes.size(), 0);
        p.resize(classes.size(), 0);
        ++t[static_cast<std::size_t>(clabels[i])];
        ++p[static_cast<std::size_t>(pred[i])];
    }
    std::size_t correct = 0;
    for (const auto& [g, tp] : votes) {
        const auto& [t, p] = tp;
        if (std::max_element(t.begin(), t.end()) - t.begin() == std::max_element(p.begin(), p.end()) - p.begin()) {
            ++correct;
        }
    }
    result.image_accuracy = static_cast<double>(correct) / static_cast<double>(votes.size());
    result.classes = std::move(classes);
    return result;
}

std::string cv_predictions_to_csv(const CvResult& result) {
    std::ostringstream out;
    if (result.task == ForestTask::regression) {
        write_csv_row(out, {"stimulus_id", "truth_mos", "pred_mos", "fold"});
        for (const auto& p : result.predictions) {
            write_csv_row(out, {p.id, format_real(p.truth), format_real(p.prediction), std::to_string(p.fold)});
        }
    } else {
        write_csv_row(out, {"patch_id", "stimulus_id", "truth", "pred", "fold"});
        for (const auto& p : result.predictions) {
            write_csv_row(out, {p.id, p.group, result.classes[static_cast<std::size_t>(p.truth)],
                                result.classes[static_cast<std::size_t>(p.prediction)], std::to_string(p.fold)});
        }
    }
    return out.str();
}

std::string cv_metrics_to_json(const CvResult& result) {
    ordered_json doc = {{"task", result.task == ForestTask::regression ? "regression" : "classification"},
                        {"k", result.k},
                        {"samples", result.predictions.size()},
                        {"groups", result.groups}};
    if (result.correlation) {
        doc["correlation"] = to_json(*result.correlation);
    }
    if (result.rmse) {
        doc["rmse"] = *result.rmse;
    }
    if (result.report) {
        doc["classification"] = to_json(*result.report);
    }
    if (result.image_accuracy) {
        doc["image_accuracy"] = *result.image_accuracy;
    }
    return doc.dump(2) + "\n";
}

}  // namespace uab
