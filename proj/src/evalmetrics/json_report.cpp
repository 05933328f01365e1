#include "uab/json_report.hpp"

namespace uab {

using nlohmann::ordered_json;

ordered_json to_json(const std::optional<double>& v) { return v ? ordered_json(*v) : ordered_json(nullptr); }

ordered_json to_json(const CorrelationTriple& c) {
    return {{"pearson", to_json(c.pearson)},
            {"kendall", to_json(c.kendall)},
            {"spearman", to_json(c.spearman)},
            {"n", c.n}};
}

ordered_json to_json(const ClassificationReport& r) {
    return {{"accuracy", r.accuracy},   {"f1", r.f1},
            {"precision", r.precision}, {"recall", r.recall},
            {"mcc", r.mcc},             {"classes", r.class_names},
            {"confusion", r.confusion}};
}

}  // namespace uab
