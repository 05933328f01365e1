#pragma once

#include <span>
#include <string>
#include <vector>

namespace uab {

// Self-contained SVG charts. Output depends only on the arguments, so equal
// inputs give byte-identical documents.

struct AxisSpec {
    std::string label;
    double min = 0.0;
    double max = 0.0;  // min == max: fitted to the data
};

struct BoxSeries {
    std::string label;
    std::vector<double> values;
};

/// Quartile boxes (type-7), whiskers at the most extreme values within
/// 1.5 IQR, remaining points drawn as outliers. Empty series leave a gap.
[[nodiscard]] std::string svg_boxplot(const std::string& title, std::span<const BoxSeries> series,
                                      const AxisSpec& y);

/// Points (x[i], y[i]); an optional dashed y = x line when both axes share a
/// range.
[[nodiscard]] std::string svg_scatter(const std::string& title, std::span<const double> x,
                                      std::span<const double> y, const AxisSpec& x_axis, const AxisSpec& y_axis,
                                      bool identity_line = false);

struct BarGroup {
    std::string label;
    std::vector<double> values;  // one per series
};

[[nodiscard]] std::string svg_grouped_bars(const std::string& title, std::span<const std::string> series,
                                           std::span<const BarGroup> groups, const AxisSpec& y);

/// Cell (r, c) shaded by matrix[r][c] relative to its row sum and labelled
/// with the raw value.
[[nodiscard]] std::string svg_heatmap(const std::string& title, std::span<const std::string> row_labels,
                                      std::span<const std::string> col_labels,
                                      const std::vector<std::vector<double>>& matrix, const std::string& row_axis,
                                      const std::string& col_axis);

}  // namespace uab
