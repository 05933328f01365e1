#include <algorithm>
#include <atomic>
#include <cmath>
#include <numeric>
#include <thread>

#include <fmt/format.h>

#include "forest_internal.hpp"
#include "uab/error.hpp"
#include "uab/forest.hpp"
#include "uab/random.hpp"

namespace uab {

namespace {

// Midpoint strictly below `hi`, so `lo` routes left and `hi` right.
double midpoint(double lo, double hi) {
    const double mid = lo + (hi - lo) / 2.0;
    return mid < hi ? mid : lo;
}

class TreeBuilder {
public:
    TreeBuilder(const FeatureMatrix& x, const TrainingTargets& targets, const ForestConfig& cfg, int max_features,
                std::uint64_t seed)
        : x_(x), t_(targets), cfg_(cfg), max_features_(max_features), rng_(seed) {}

    DecisionTree build() {
        const std::size_t n = x_.rows();
        samples_.resize(n);
        if (cfg_.bootstrap) {
            for (auto& s : samples_) {
                s = static_cast<std::size_t>(uniform_index(rng_, n));
            }
        } else {
            std::iota(samples_.begin(), samples_.end(), std::size_t{0});
        }
        features_.resize(x_.cols());
        std::iota(features_.begin(), features_.end(), 0);
        grow(0, samples_.size(), 0);
        return std::move(tree_);
    }

private:
    struct Split {
        int feature = -1;
        double threshold = 0.0;
        double score = -std::numeric_limits<double>::infinity();
    };

    int add_node() {
        tree_.feature.push_back(-1);
        tree_.threshold.push_back(0.0);
        tree_.left.push_back(-1);
        tree_.right.push_back(-1);
        tree_.value.push_back(0.0);
        tree_.histogram.emplace_back();
        return static_cast<int>(tree_.feature.size() - 1);
    }

    bool pure(std::size_t begin, std::size_t end) const {
        const std::size_t first = samples_[begin];
        for (std::size_t i = begin + 1; i < end; ++i) {
            const std::size_t s = samples_[i];
            if (t_.classification() ? t_.labels[s] != t_.labels[first] : t_.values[s] != t_.values[first]) {
                return false;
            }
        }
        return true;
    }

    void make_leaf(int node, std::size_t begin, std::size_t end) {
        const auto idx = static_cast<std::size_t>(node);
        if (t_.classification()) {
            std::vector<double> counts(static_cast<std::size_t>(t_.n_classes), 0.0);
            for (std::size_t i = begin; i < end; ++i) {
                counts[static_cast<std::size_t>(t_.labels[samples_[i]])] += 1.0;
            }
            // max_element returns the first maximum: lowest class index on ties.
            tree_.value[idx] = static_cast<double>(std::max_element(counts.begin(), counts.end()) - counts.begin());
            tree_.histogram[idx] = std::move(counts);
        } else {
            double sum = 0.0;
            for (std::size_t i = begin; i < end; ++i) {
                sum += t_.values[samples_[i]];
            }
            tree_.value[idx] = sum / static_cast<double>(end - begin);
        }
    }

    // Score to maximize: sum over children of (sum of centered targets)^2 / n
    // for regression, sum over children of sum_k count_k^2 / n for Gini.
    // Both equal (parent impurity mass - weighted child impurity) up to a
    // node constant.
    Split best_split_on(int feature, std::size_t begin, std::size_t end) {
        const std::size_t n = end - begin;
        const auto min_leaf = static_cast<std::size_t>(cfg_.min_samples_leaf);
        order_.resize(n);
        for (std::size_t i = 0; i < n; ++i) {
            order_[i] = {x_.at(samples_[begin + i], static_cast<std::size_t>(feature)), samples_[begin + i]};
        }
        std::sort(order_.begin(), order_.end());
        Split best;
        if (order_.front().first == order_.back().first) {
            return best;
        }
        if (t_.classification()) {
            const auto k = static_cast<std::size_t>(t_.n_classes);
            left_counts_.assign(k, 0.0);
            right_counts_.assign(k, 0.0);
            for (const auto& [v, s] : order_) {
                right_counts_[static_cast<std::size_t>(t_.labels[s])] += 1.0;
            }
            double left_sq = 0.0;
            double right_sq = 0.0;
            for (double c : right_counts_) {
                right_sq += c * c;
            }
            for (std::size_t i = 1; i < n; ++i) {
                const auto c = static_cast<std::size_t>(t_.labels[order_[i - 1].second]);
                left_sq += 2.0 * left_counts_[c] + 1.0;
                right_sq -= 2.0 * right_counts_[c] - 1.0;
                left_counts_[c] += 1.0;
                right_counts_[c] -= 1.0;
                if (i < min_leaf || n - i < min_leaf || order_[i - 1].first == order_[i].first) {
                    continue;
                }
                const double score = left_sq / static_cast<double>(i) + right_sq / static_cast<double>(n - i);
                if (score > best.score) {
                    best = {feature, midpoint(order_[i - 1].first, order_[i].first), score};
                }
            }
        } else {
            double mean = 0.0;
            for (const auto& [v, s] : order_) {
                mean += t_.values[s];
            }
            mean /= static_cast<double>(n);
            double left_sum = 0.0;
            for (std::size_t i = 1; i < n; ++i) {
                left_sum += t_.values[order_[i - 1].second] - mean;
                if (i < min_leaf || n - i < min_leaf || order_[i - 1].first == order_[i].first) {
                    continue;
                }
                // Centered sums: right_sum == -left_sum.
                const double score = left_sum * left_sum *
                                     (1.0 / static_cast<double>(i) + 1.0 / static_cast<double>(n - i));
                if (score > best.score) {
                    best = {feature, midpoint(order_[i - 1].first, order_[i].first), score};
                }
            }
        }
        return best;
    }

    void grow(std::size_t begin, std::size_t end, int depth) {
        const int node = add_node();
        const std::size_t n = end - begin;
        const bool depth_limited = cfg_.max_depth && depth >= *cfg_.max_depth;
        if (depth_limited || n < 2 * static_cast<std::size_t>(cfg_.min_samples_leaf) || pure(begin, end)) {
            make_leaf(node, begin, end);
            return;
        }

        // Features are drawn without replacement until max_features
        // non-constant ones were examined, or none remain.
        Split best;
        int examined = 0;
        std::size_t remaining = features_.size();
        while (remaining > 0 && examined < max_features_) {
            const auto j = static_cast<std::size_t>(uniform_index(rng_, remaining));
            --remaining;
            std::swap(features_[j], features_[remaining]);
            const int f = features_[remaining];
            const Split s = best_split_on(f, begin, end);
            if (s.feature < 0 && order_.front().first == order_.back().first) {
                continue;  // constant in this node; does not count
            }
            ++examined;
            if (s.feature >= 0 && s.score > best.score) {
                best = s;
            }
        }
        if (best.feature < 0) {
            make_leaf(node, begin, end);
            return;
        }

        const auto f = static_cast<std::size_t>(best.feature);
        const auto mid = std::stable_partition(samples_.begin() + static_cast<std::ptrdiff_t>(begin),
                                               samples_.begin() + static_cast<std::ptrdiff_t>(end),
                                               [&](std::size_t s) { return x_.at(s, f) <= best.threshold; });
        const auto split_at = static_cast<std::size_t>(mid - samples_.begin());
        const auto idx = static_cast<std::size_t>(node);
        tree_.feature[idx] = best.feature;
        tree_.threshold[idx] = best.threshold;
        tree_.left[idx] = static_cast<int>(tree_.feature.size());
        grow(begin, split_at, depth + 1);
        tree_.right[idx] = static_cast<int>(tree_.feature.size());
        grow(split_at, end, depth + 1);
    }

    const FeatureMatrix& x_;
    const TrainingTargets& t_;
    const ForestConfig& cfg_;
    int max_features_;
    std::mt19937_64 rng_;
    DecisionTree tree_;
    std::vector<std::size_t> samples_;
    std::vector<int> features_;
    std::vector<std::pair<double, std::size_t>> order_;
    std::vector<double> left_counts_;
    std::vector<double> right_counts_;
};

}  // namespace

int DecisionTree::leaf_for(std::span<const double> x) const {
    int node = 0;
    while (feature[static_cast<std::size_t>(node)] >= 0) {
        const auto i = static_cast<std::size_t>(node);
        node = x[static_cast<std::size_t>(feature[i])] <= threshold[i] ? left[i] : right[i];
    }
    return node;
}

std::vector<DecisionTree> grow_forest(const FeatureMatrix& x, const TrainingTargets& targets, const ForestConfig& cfg,
                                      int max_features) {
    std::vector<DecisionTree> trees(static_cast<std::size_t>(cfg.n_trees));
    std::atomic<int> next{0};
    auto worker = [&] {
        for (int t = next++; t < cfg.n_trees; t = next++) {
            TreeBuilder builder(x, targets, cfg, max_features, derive_seed(cfg.seed, static_cast<std::uint64_t>(t)));
            trees[static_cast<std::size_t>(t)] = builder.build();
        }
    };
    const int workers = std::min(cfg.jobs, cfg.n_trees);
    if (workers <= 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        for (int w = 0; w < workers; ++w) {
            pool.emplace_back(worker);
        }
    }
    return trees;
}

}  // namespace uab
