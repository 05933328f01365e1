#pragma once

#include <span>
#include <vector>

#include "uab/forest.hpp"

namespace uab {

struct TrainingTargets {
    std::span<const double> values;  // regression
    std::span<const int> labels;     // classification
    int n_classes = 0;

    [[nodiscard]] bool classification() const noexcept { return n_classes > 0; }
};

/// Tree t is grown from the stream derive_seed(cfg.seed, t).
[[nodiscard]] std::vector<DecisionTree> grow_forest(const FeatureMatrix& x, const TrainingTargets& targets,
                                                    const ForestConfig& cfg, int max_features);

}  // namespace uab
