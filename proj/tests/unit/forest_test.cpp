#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <random>
#include <set>

#include <gtest/gtest.h>

#include "uab/error.hpp"
#include "uab/forest.hpp"
#include "uab/random.hpp"
#include "support/oracles.hpp"

namespace uab {
namespace {

using testing::brute_force_split;
using testing::gini_mass;
using testing::sse;

FeatureMatrix random_matrix(std::size_t rows, std::size_t cols, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    FeatureMatrix x(rows, cols);
    for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t c = 0; c < cols; ++c) {
            x.at(r, c) = static_cast<double>(rng() % 1000000) / 1000.0;
        }
    }
    return x;
}

ForestConfig single_tree() {
    ForestConfig cfg;
    cfg.n_trees = 1;
    cfg.bootstrap = false;
    cfg.features_per_split = FeatureSubset{FeatureSubset::Kind::all, 0};
    return cfg;
}

std::string fmt_id(const std::string& prefix, std::size_t i) {
    std::string digits = std::to_string(i);
    return prefix + std::string(digits.size() < 5 ? 5 - digits.size() : 0, '0') + digits;
}

std::vector<std::string> make_ids(std::size_t n, const std::string& prefix = "s") {
    std::vector<std::string> ids;
    for (std::size_t i = 0; i < n; ++i) {
        ids.push_back(fmt_id(prefix, i));
    }
    return ids;
}

TEST(Random, UniformIndexStaysInRange) {
    std::mt19937_64 rng(1);
    std::vector<int> hits(7, 0);
    for (int i = 0; i < 7000; ++i) {
        const auto v = uniform_index(rng, 7);
        ASSERT_LT(v, 7u);
        ++hits[v];
    }
    for (int h : hits) {
        EXPECT_GT(h, 850);
        EXPECT_LT(h, 1150);
    }
}

TEST(Random, ShuffleIsAPermutationAndSeeded) {
    std::vector<int> a(50);
    std::iota(a.begin(), a.end(), 0);
    auto b = a;
    std::mt19937_64 r1(9), r2(9);
    shuffle(std::span<int>(a), r1);
    shuffle(std::span<int>(b), r2);
    EXPECT_EQ(a, b);
    auto sorted = a;
    std::sort(sorted.begin(), sorted.end());
    for (int i = 0; i < 50; ++i) EXPECT_EQ(sorted[static_cast<std::size_t>(i)], i);
    EXPECT_NE(derive_seed(1, 0), derive_seed(1, 1));
    EXPECT_NE(derive_seed(1, 0), derive_seed(2, 0));
}

TEST(FeatureSubset, ResolvesCounts) {
    EXPECT_EQ(FeatureSubset::parse("sqrt").resolve(10), 3);
    EXPECT_EQ(FeatureSubset::parse("third").resolve(10), 3);
    EXPECT_EQ(FeatureSubset::parse("third").resolve(2), 1);
    EXPECT_EQ(FeatureSubset::parse("all").resolve(10), 10);
    EXPECT_EQ(FeatureSubset::parse("4").resolve(10), 4);
    EXPECT_EQ(FeatureSubset::parse("40").resolve(10), 10);
    EXPECT_THROW((void)FeatureSubset::parse("0"), ConfigError);
    EXPECT_THROW((void)FeatureSubset::parse("half"), ConfigError);
    ForestConfig cfg;
    EXPECT_EQ(cfg.subset_for(ForestTask::classification).kind, FeatureSubset::Kind::sqrt);
    EXPECT_EQ(cfg.subset_for(ForestTask::regression).kind, FeatureSubset::Kind::third);
    EXPECT_EQ(cfg.n_trees, 100);
    EXPECT_EQ(cfg.min_samples_leaf, 1);
    EXPECT_TRUE(cfg.bootstrap);
    EXPECT_FALSE(cfg.max_depth.has_value());
}

TEST(Cart, RegressionRootMatchesBruteForce) {
    for (std::uint64_t seed = 1; seed <= 25; ++seed) {
        const auto x = random_matrix(20, 4, seed);
        std::mt19937_64 rng(seed + 100);
        std::vector<double> y(20);
        for (auto& v : y) v = static_cast<double>(rng() % 100000) / 997.0;
        const auto model = train_regressor(x, y, single_tree());
        const auto oracle = brute_force_split(x, [&](const auto& l, const auto& r) {
            std::vector<double> yl, yr;
            for (auto i : l) yl.push_back(y[i]);
            for (auto i : r) yr.push_back(y[i]);
            return sse(yl) + sse(yr);
        });
        const auto& tree = model.trees[0];
        ASSERT_EQ(tree.feature[0], oracle.feature) << "seed " << seed;
        EXPECT_NEAR(tree.threshold[0], oracle.threshold, 1e-12) << "seed " << seed;
    }
}

TEST(Cart, ClassificationRootMatchesBruteForce) {
    int checked = 0;
    for (std::uint64_t seed = 1; seed <= 40; ++seed) {
        const auto x = random_matrix(20, 3, seed * 7);
        std::mt19937_64 rng(seed + 200);
        std::vector<int> y(20);
        for (auto& v : y) v = static_cast<int>(rng() % 3);
        const auto gini = [&](const auto& l, const auto& r) {
            std::vector<int> yl, yr;
            for (auto i : l) yl.push_back(y[i]);
            for (auto i : r) yr.push_back(y[i]);
            return gini_mass(yl, 3) + gini_mass(yr, 3);
        };
        const auto oracle = brute_force_split(x, gini);
        // Count ties at the optimum; a tie makes the choice order-dependent.
        int ties = 0;
        for (std::size_t f = 0; f < x.cols(); ++f) {
            std::set<double> values;
            for (std::size_t r = 0; r < x.rows(); ++r) values.insert(x.at(r, f));
            std::vector<double> sorted(values.begin(), values.end());
            for (std::size_t i = 1; i < sorted.size(); ++i) {
                const double thr = (sorted[i - 1] + sorted[i]) / 2.0;
                std::vector<std::size_t> l, r;
                for (std::size_t k = 0; k < x.rows(); ++k) (x.at(k, f) <= thr ? l : r).push_back(k);
                if (std::fabs(static_cast<double>(gini(l, r) - oracle.impurity)) < 1e-9) ++ties;
            }
        }
        if (ties != 1) {
            continue;
        }
        const auto model = train_classifier(x, y, {"a", "b", "c"}, single_tree());
        ASSERT_EQ(model.trees[0].feature[0], oracle.feature) << "seed " << seed;
        EXPECT_NEAR(model.trees[0].threshold[0], oracle.threshold, 1e-12);
        ++checked;
    }
    EXPECT_GE(checked, 10);
}

TEST(Cart, ConstantTargetPredictsConstant) {
    const auto x = random_matrix(30, 3, 5);
    const std::vector<double> y(30, 3.25);
    ForestConfig cfg;
    cfg.n_trees = 10;
    const auto model = train_regressor(x, y, cfg);
    for (std::size_t r = 0; r < x.rows(); ++r) {
        EXPECT_EQ(predict(model, x.row(r)), 3.25);
    }
    for (const auto& t : model.trees) EXPECT_EQ(t.node_count(), 1u);
}

TEST(Cart, UnlimitedTreeMemorizes) {
    const auto x = random_matrix(60, 3, 6);
    std::vector<double> y(60);
    std::mt19937_64 rng(7);
    for (auto& v : y) v = static_cast<double>(rng() % 500) / 100.0;
    const auto model = train_regressor(x, y, single_tree());
    for (std::size_t r = 0; r < x.rows(); ++r) {
        EXPECT_EQ(predict(model, x.row(r)), y[r]);
    }
}

TEST(Cart, MinSamplesLeafRespected) {
    const auto x = random_matrix(50, 2, 8);
    std::vector<double> y(50);
    for (std::size_t i = 0; i < y.size(); ++i) y[i] = x.at(i, 0);
    auto cfg = single_tree();
    cfg.min_samples_leaf = 7;
    const auto model = train_regressor(x, y, cfg);
    const auto& t = model.trees[0];
    std::vector<int> per_leaf(t.node_count(), 0);
    for (std::size_t r = 0; r < x.rows(); ++r) ++per_leaf[static_cast<std::size_t>(t.leaf_for(x.row(r)))];
    for (std::size_t i = 0; i < t.node_count(); ++i) {
        if (t.feature[i] < 0) EXPECT_GE(per_leaf[i], 7);
    }
}

TEST(Cart, MaxDepthZeroIsSingleLeaf) {
    const auto x = random_matrix(20, 2, 9);
    std::vector<double> y(20);
    for (std::size_t i = 0; i < 20; ++i) y[i] = static_cast<double>(i);
    auto cfg = single_tree();
    cfg.max_depth = 0;
    const auto model = train_regressor(x, y, cfg);
    EXPECT_EQ(model.trees[0].node_count(), 1u);
    EXPECT_DOUBLE_EQ(predict(model, x.row(0)), 9.5);
}

TEST(Cart, DuplicatedColumnNeverHurtsTrainingAccuracy) {
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        const auto x = random_matrix(80, 3, seed);
        std::vector<int> y(80);
        for (std::size_t i = 0; i < 80; ++i) y[i] = (x.at(i, 0) + x.at(i, 1) > 1000.0) ? 1 : 0;
        FeatureMatrix dup(80, 4);
        for (std::size_t r = 0; r < 80; ++r) {
            for (std::size_t c = 0; c < 3; ++c) dup.at(r, c) = x.at(r, c);
            dup.at(r, 3) = x.at(r, 1);
        }
        auto cfg = single_tree();
        cfg.max_depth = 3;
        const auto accuracy = [&](const FeatureMatrix& m) {
            const auto model = train_classifier(m, y, {"n", "y"}, cfg);
            int ok = 0;
            for (std::size_t r = 0; r < 80; ++r) ok += static_cast<int>(predict(model, m.row(r))) == y[r];
            return ok;
        };
        EXPECT_GE(accuracy(dup), accuracy(x)) << "seed " << seed;
    }
}

TEST(Forest, RegressionIsMeanOfTrees) {
    const auto x = random_matrix(40, 4, 10);
    std::vector<double> y(40);
    for (std::size_t i = 0; i < 40; ++i) y[i] = x.at(i, 2) / 100.0;
    ForestConfig cfg;
    cfg.n_trees = 7;
    cfg.seed = 3;
    const auto model = train_regressor(x, y, cfg);
    const auto row = x.row(5);
    double sum = 0.0;
    for (const auto& t : model.trees) sum += t.value[static_cast<std::size_t>(t.leaf_for(row))];
    EXPECT_NEAR(predict(model, row), sum / 7.0, 1e-12);
}

TEST(Forest, MajorityVoteAndLowestIndexTies) {
    RandomForestModel model;
    model.task = ForestTask::classification;
    model.feature_names = {"f0"};
    model.classes = {"A", "B"};
    const auto leaf = [](double cls) {
        DecisionTree t;
        t.feature = {-1};
        t.threshold = {0.0};
        t.left = {-1};
        t.right = {-1};
        t.value = {cls};
        t.histogram = {{}};
        return t;
    };
    model.trees = {leaf(0), leaf(0), leaf(1)};
    const std::vector<double> x = {0.5};
    EXPECT_EQ(predict(model, x), 0.0);
    EXPECT_EQ(vote_counts(model, x), (std::vector<int>{2, 1}));
    model.trees = {leaf(1), leaf(0)};
    EXPECT_EQ(predict(model, x), 0.0);
    model.trees = {leaf(1)};
    EXPECT_EQ(predict(model, x), 1.0);
}

TEST(Forest, VoteCountsSumToTrees) {
    const auto x = random_matrix(60, 5, 11);
    std::vector<int> y(60);
    for (std::size_t i = 0; i < 60; ++i) y[i] = static_cast<int>(i % 3);
    ForestConfig cfg;
    cfg.n_trees = 13;
    const auto model = train_classifier(x, y, {"a", "b", "c"}, cfg);
    for (std::size_t r = 0; r < 60; r += 7) {
        const auto v = vote_counts(model, x.row(r));
        EXPECT_EQ(std::accumulate(v.begin(), v.end(), 0), 13);
    }
}

TEST(Forest, WrongRowLengthIsShapeError) {
    const auto x = random_matrix(10, 3, 12);
    const std::vector<double> y(10, 1.0);
    const auto model = train_regressor(x, y, single_tree());
    const std::vector<double> short_row = {1.0, 2.0};
    EXPECT_THROW((void)predict(model, short_row), ShapeError);
}

TEST(Forest, InputValidation) {
    FeatureMatrix one(1, 2);
    const std::vector<double> y1 = {1.0};
    EXPECT_THROW((void)train_regressor(one, y1, single_tree()), DegenerateData);
    auto x = random_matrix(5, 2, 13);
    x.at(2, 1) = std::numeric_limits<double>::quiet_NaN();
    const std::vector<double> y5(5, 1.0);
    EXPECT_THROW((void)train_regressor(x, y5, single_tree()), DegenerateData);
    const std::vector<double> y4(4, 1.0);
    EXPECT_THROW((void)train_regressor(random_matrix(5, 2, 13), y4, single_tree()), ShapeError);
    ForestConfig bad;
    bad.n_trees = 0;
    EXPECT_THROW((void)train_regressor(random_matrix(5, 2, 13), y5, bad), ConfigError);
    const std::vector<int> labels = {0, 1, 2, 0, 1};
    EXPECT_THROW((void)train_classifier(random_matrix(5, 2, 13), labels, {"a", "b"}, single_tree()), ShapeError);
}

TEST(Forest, IdenticalAcrossWorkerCounts) {
    const auto x = random_matrix(120, 6, 14);
    std::vector<double> y(120);
    for (std::size_t i = 0; i < 120; ++i) y[i] = x.at(i, 0) - 0.5 * x.at(i, 3);
    ForestConfig cfg;
    cfg.n_trees = 16;
    cfg.seed = 77;
    const auto serial = model_to_json(train_regressor(x, y, cfg));
    cfg.jobs = 4;
    EXPECT_EQ(model_to_json(train_regressor(x, y, cfg)), serial);
    cfg.seed = 78;
    EXPECT_NE(model_to_json(train_regressor(x, y, cfg)), serial);
}

TEST(Forest, JsonRoundTripPreservesPredictions) {
    const auto x = random_matrix(50, 4, 15);
    std::vector<int> y(50);
    for (std::size_t i = 0; i < 50; ++i) y[i] = x.at(i, 1) > 500.0 ? 1 : 0;
    ForestConfig cfg;
    cfg.n_trees = 5;
    cfg.max_depth = 4;
    const auto model = train_classifier(x, y, {"lo", "hi"}, cfg, {"a", "b", "c", "d"});
    const auto json = model_to_json(model);
    const auto back = model_from_json(json);
    EXPECT_EQ(model_to_json(back), json);
    EXPECT_EQ(back.classes, model.classes);
    EXPECT_EQ(back.feature_names, model.feature_names);
    EXPECT_EQ(back.config.max_depth, 4);
    for (std::size_t r = 0; r < 50; ++r) EXPECT_EQ(predict(back, x.row(r)), predict(model, x.row(r)));
}

TEST(Forest, MalformedJsonRejected) {
    EXPECT_THROW((void)model_from_json("{}"), FormatError);
    EXPECT_THROW((void)model_from_json("nope"), FormatError);
    const auto x = random_matrix(10, 2, 16);
    std::vector<double> y(10);
    for (std::size_t i = 0; i < 10; ++i) y[i] = static_cast<double>(i);
    auto json = model_to_json(train_regressor(x, y, single_tree()));
    // Point the root's left child back at itself.
    const auto pos = json.find("\"left\":[");
    ASSERT_NE(pos, std::string::npos);
    json.replace(pos + 8, 1, "0");
    EXPECT_THROW((void)model_from_json(json), FormatError);
}

TEST(Imputation, TrainingMedians) {
    FeatureMatrix x(4, 2);
    const double nan = std::numeric_limits<double>::quiet_NaN();
    x.at(0, 0) = 1;
    x.at(1, 0) = 5;
    x.at(2, 0) = nan;
    x.at(3, 0) = 3;
    for (std::size_t r = 0; r < 4; ++r) x.at(r, 1) = nan;
    const auto med = column_medians(x);
    EXPECT_EQ(med, (std::vector<double>{3.0, 0.0}));
    impute(x, med);
    EXPECT_EQ(x.at(2, 0), 3.0);
    EXPECT_EQ(x.at(1, 1), 0.0);
}

TEST(Folds, PartitionBalancedAndSeeded) {
    const auto ids = make_ids(103);
    const auto a = assign_folds(ids, 10, 5);
    EXPECT_EQ(a, assign_folds(ids, 10, 5));
    EXPECT_NE(a, assign_folds(ids, 10, 6));
    std::vector<int> sizes(10, 0);
    for (int f : a) ++sizes[static_cast<std::size_t>(f)];
    for (int s : sizes) {
        EXPECT_GE(s, 10);
        EXPECT_LE(s, 11);
    }
}

TEST(Folds, IndependentOfInputOrder) {
    auto ids = make_ids(40);
    const auto a = assign_folds(ids, 5, 1);
    std::map<std::string, int> by_id;
    for (std::size_t i = 0; i < ids.size(); ++i) by_id[ids[i]] = a[i];
    std::reverse(ids.begin(), ids.end());
    const auto b = assign_folds(ids, 5, 1);
    for (std::size_t i = 0; i < ids.size(); ++i) EXPECT_EQ(b[i], by_id[ids[i]]);
}

TEST(Folds, GroupsStayTogether) {
    std::vector<std::string> groups;
    for (int g = 0; g < 12; ++g) {
        for (int p = 0; p < 5; ++p) groups.push_back("img" + std::to_string(g));
    }
    const auto folds = assign_group_folds(groups, 4, 3);
    for (std::size_t i = 0; i < groups.size(); i += 5) {
        for (std::size_t j = 1; j < 5; ++j) EXPECT_EQ(folds[i + j], folds[i]);
    }
    EXPECT_THROW((void)assign_group_folds(std::vector<std::string>(10, "one"), 2, 0), TooFewSamples);
}

TEST(Folds, TooFewSamples) {
    EXPECT_THROW((void)assign_folds(make_ids(5), 10, 0), TooFewSamples);
    EXPECT_THROW((void)assign_folds(make_ids(5), 1, 0), TooFewSamples);
}

TEST(CrossValidate, LeaveOneOut) {
    const auto x = random_matrix(10, 3, 17);
    std::vector<double> y(10);
    for (std::size_t i = 0; i < 10; ++i) y[i] = x.at(i, 0);
    ForestConfig cfg;
    cfg.n_trees = 5;
    const auto cv = cross_validate(make_ids(10), x, y, cfg, 10);
    ASSERT_EQ(cv.predictions.size(), 10u);
    std::set<int> folds;
    for (const auto& p : cv.predictions) folds.insert(p.fold);
    EXPECT_EQ(folds.size(), 10u);
}

TEST(CrossValidate, LearnsSignalAndIsDeterministic) {
    const auto x = random_matrix(200, 5, 18);
    std::vector<double> y(200);
    std::mt19937_64 rng(19);
    for (std::size_t i = 0; i < 200; ++i) y[i] = x.at(i, 0) / 100.0 + static_cast<double>(rng() % 100) / 100.0;
    ForestConfig cfg;
    cfg.n_trees = 30;
    cfg.seed = 11;
    const auto ids = make_ids(200);
    const auto cv = cross_validate(ids, x, y, cfg, 10);
    ASSERT_TRUE(cv.correlation && cv.correlation->pearson);
    EXPECT_GT(*cv.correlation->pearson, 0.9);
    EXPECT_EQ(cv_predictions_to_csv(cv), cv_predictions_to_csv(cross_validate(ids, x, y, cfg, 10)));
    EXPECT_EQ(cv.predictions.size(), 200u);
}

TEST(CrossValidate, RowOrderDoesNotMatter) {
    const auto x = random_matrix(60, 4, 20);
    std::vector<double> y(60);
    for (std::size_t i = 0; i < 60; ++i) y[i] = x.at(i, 1);
    const auto ids = make_ids(60);
    ForestConfig cfg;
    cfg.n_trees = 8;
    const auto a = cross_validate(ids, x, y, cfg, 5);

    std::vector<std::size_t> perm(60);
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    std::reverse(perm.begin(), perm.end());
    std::swap(perm[0], perm[30]);
    std::vector<std::string> pids;
    std::vector<double> py;
    for (auto i : perm) {
        pids.push_back(ids[i]);
        py.push_back(y[i]);
    }
    const auto b = cross_validate(pids, x.select_rows(perm), py, cfg, 5);
    EXPECT_EQ(cv_predictions_to_csv(a), cv_predictions_to_csv(b));
}

TEST(CrossValidate, MissingValuesImputed) {
    auto x = random_matrix(40, 3, 21);
    x.at(3, 1) = std::numeric_limits<double>::quiet_NaN();
    x.at(17, 2) = std::numeric_limits<double>::quiet_NaN();
    std::vector<double> y(40);
    for (std::size_t i = 0; i < 40; ++i) y[i] = static_cast<double>(i % 5);
    ForestConfig cfg;
    cfg.n_trees = 4;
    const auto cv = cross_validate(make_ids(40), x, y, cfg, 4);
    for (const auto& p : cv.predictions) EXPECT_TRUE(std::isfinite(p.prediction));
}

TEST(DetectBaseline, SeparableLabelsAreLearned) {
    FeatureMatrix x;
    std::vector<std::string> ids, groups;
    std::vector<int> labels;
    for (int g = 0; g < 30; ++g) {
        const int cls = g % 3;
        for (int p = 0; p < 4; ++p) {
            const std::vector<double> row = {cls * 10.0 + p * 0.1, static_cast<double>((g * 7 + p) % 11)};
            x.append_row(row);
            ids.push_back("img" + std::to_string(100 + g) + "_p" + std::to_string(p));
            groups.push_back("img" + std::to_string(100 + g));
            labels.push_back(cls);
        }
    }
    ForestConfig cfg;
    cfg.n_trees = 10;
    const auto cv = detect_baseline(ids, groups, x, labels, {"a", "b", "c"}, cfg, 5);
    ASSERT_TRUE(cv.report.has_value());
    EXPECT_DOUBLE_EQ(cv.report->accuracy, 1.0);
    EXPECT_DOUBLE_EQ(*cv.image_accuracy, 1.0);
    EXPECT_EQ(cv.groups, 30u);
    const auto csv = cv_predictions_to_csv(cv);
    EXPECT_EQ(csv.substr(0, csv.find('\n')), "patch_id,stimulus_id,truth,pred,fold");
    // Grouped folds: all patches of one image share a fold.
    std::map<std::string, int> fold_of;
    for (const auto& p : cv.predictions) {
        const auto [it, inserted] = fold_of.emplace(p.group, p.fold);
        EXPECT_EQ(it->second, p.fold);
    }
}

TEST(DetectBaseline, ShuffledLabelsAreAtChance) {
    FeatureMatrix x;
    std::vector<std::string> ids, groups;
    std::vector<int> labels;
    std::mt19937_64 rng(22);
    for (int g = 0; g < 150; ++g) {
        for (int p = 0; p < 8; ++p) {
            const std::vector<double> row = {static_cast<double>(rng() % 1000), static_cast<double>(rng() % 1000),
                                             static_cast<double>(rng() % 1000)};
            x.append_row(row);
            ids.push_back(fmt_id("p", static_cast<std::size_t>(g * 8 + p)));
            groups.push_back(fmt_id("g", static_cast<std::size_t>(g)));
            labels.push_back(static_cast<int>(uniform_index(rng, 6)));
        }
    }
    ForestConfig cfg;
    cfg.n_trees = 20;
    cfg.seed = 4;
    const auto cv = detect_baseline(ids, groups, x, labels, {"c0", "c1", "c2", "c3", "c4", "c5"}, cfg, 10);
    EXPECT_NEAR(cv.report->accuracy, 1.0 / 6.0, 0.05);
}

}  // namespace
}  // namespace uab
