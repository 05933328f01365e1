#include <algorithm>
#include <cmath>
#include <set>

#include <fmt/format.h>

#include "uab/error.hpp"
#include "uab/evalmetrics.hpp"

namespace uab {

ClassificationReport classification_report(std::span<const int> truth, std::span<const int> predicted,
                                           std::vector<std::string> class_names) {
    if (truth.size() != predicted.size()) {
        throw LengthMismatch(fmt::format("truth has {} labels, predictions {}", truth.size(), predicted.size()));
    }
    if (truth.empty()) {
        throw InsufficientData("classification report needs at least one sample");
    }
    const std::size_t k = class_names.size();
    ClassificationReport rep;
    rep.class_names = std::move(class_names);
    rep.confusion.assign(k, std::vector<std::size_t>(k, 0));
    for (std::size_t i = 0; i < truth.size(); ++i) {
        const int t = truth[i];
        const int p = predicted[i];
        if (t < 0 || p < 0 || static_cast<std::size_t>(t) >= k || static_cast<std::size_t>(p) >= k) {
            throw RangeError(fmt::format("label out of range for {} classes", k), 0);
        }
        ++rep.confusion[static_cast<std::size_t>(t)][static_cast<std::size_t>(p)];
    }

    const double total = static_cast<double>(truth.size());
    std::vector<double> true_count(k, 0.0);
    std::vector<double> pred_count(k, 0.0);
    double correct = 0.0;
    for (std::size_t t = 0; t < k; ++t) {
        for (std::size_t p = 0; p < k; ++p) {
            const auto c = static_cast<double>(rep.confusion[t][p]);
            true_count[t] += c;
            pred_count[p] += c;
        }
        correct += static_cast<double>(rep.confusion[t][t]);
    }
    rep.accuracy = correct / total;

    for (std::size_t c = 0; c < k; ++c) {
        if (true_count[c] == 0.0) {
            continue;
        }
        const double tp = static_cast<double>(rep.confusion[c][c]);
        const double precision = pred_count[c] > 0.0 ? tp / pred_count[c] : 0.0;
        const double recall = tp / true_count[c];
        const double f1 = precision + recall > 0.0 ? 2.0 * precision * recall / (precision + recall) : 0.0;
        const double support = true_count[c] / total;
        rep.precision += support * precision;
        rep.recall += support * recall;
        rep.f1 += support * f1;
    }

    // Multiclass MCC from the confusion marginals.
    double sum_pt = 0.0;
    double sum_pp = 0.0;
    double sum_tt = 0.0;
    for (std::size_t c = 0; c < k; ++c) {
        sum_pt += pred_count[c] * true_count[c];
        sum_pp += pred_count[c] * pred_count[c];
        sum_tt += true_count[c] * true_count[c];
    }
    const double cov_ytyp = correct * total - sum_pt;
    const double cov_ypyp = total * total - sum_pp;
    const double cov_ytyt = total * total - sum_tt;
    rep.mcc = (cov_ypyp == 0.0 || cov_ytyt == 0.0) ? 0.0 : cov_ytyp / std::sqrt(cov_ypyp * cov_ytyt);
    return rep;
}

ClassificationReport classification_report(std::span<const std::string> truth,
                                           std::span<const std::string> predicted) {
    std::set<std::string> names(truth.begin(), truth.end());
    names.insert(predicted.begin(), predicted.end());
    std::vector<std::string> classes(names.begin(), names.end());
    auto index = [&](const std::string& s) {
        return static_cast<int>(std::lower_bound(classes.begin(), classes.end(), s) - classes.begin());
    };
    std::vector<int> t;
    std::vector<int> p;
    t.reserve(truth.size());
    p.reserve(predicted.size());
    for (const auto& s : truth) {
        t.push_back(index(s));
    }
    for (const auto& s : predicted) {
        p.push_back(index(s));
    }
    return classification_report(t, p, std::move(classes));
}

}  // namespace uab
