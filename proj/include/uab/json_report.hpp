#pragma once

#include <optional>

#include <json.hpp>

#include "uab/evalmetrics.hpp"

namespace uab {

/// Undefined coefficients serialize as null.
[[nodiscard]] nlohmann::ordered_json to_json(const CorrelationTriple& c);
[[nodiscard]] nlohmann::ordered_json to_json(const ClassificationReport& r);
[[nodiscard]] nlohmann::ordered_json to_json(const std::optional<double>& v);

}  // namespace uab
