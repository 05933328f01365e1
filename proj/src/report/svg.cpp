#include "uab/svg.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <fmt/format.h>

#include "uab/error.hpp"
#include "uab/subjective.hpp"

namespace uab {

namespace {

constexpr double kWidth = 640;
constexpr double kHeight = 420;
constexpr double kLeft = 70;
constexpr double kRight = 20;
constexpr double kTop = 40;
constexpr double kBottom = 80;

constexpr const char* kPalette[] = {"#4e79a7", "#f28e2b", "#e15759", "#76b7b2", "#59a14f",
                                    "#edc948", "#b07aa1", "#ff9da7", "#9c755f", "#bab0ac"};

std::string escape(std::string_view s) {
    std::string out;
    for (char c : s) {
        switch (c) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '"': out += "&quot;"; break;
            default: out += c;
        }
    }
    return out;
}

std::string num(double v) { return fmt::format("{:.2f}", v); }

const char* colour(std::size_t i) { return kPalette[i % std::size(kPalette)]; }

struct Range {
    double lo = 0.0;
    double hi = 1.0;
};

Range resolve(const AxisSpec& axis, double data_lo, double data_hi) {
    if (axis.min < axis.max) {
        return {axis.min, axis.max};
    }
    if (!(data_lo <= data_hi)) {
        return {0.0, 1.0};
    }
    if (data_lo == data_hi) {
        return {data_lo - 0.5, data_hi + 0.5};
    }
    const double pad = 0.05 * (data_hi - data_lo);
    return {data_lo - pad, data_hi + pad};
}

// Step from {1,2,5}x10^k giving at most ~8 ticks.
double tick_step(const Range& r) {
    const double raw = (r.hi - r.lo) / 8.0;
    const double mag = std::pow(10.0, std::floor(std::log10(raw)));
    for (double m : {1.0, 2.0, 5.0, 10.0}) {
        if (m * mag >= raw) {
            return m * mag;
        }
    }
    return 10.0 * mag;
}

std::string format_tick(double v, double step) {
    const int decimals = step >= 1.0 ? 0 : static_cast<int>(std::ceil(-std::log10(step)));
    const double rounded = std::abs(v) < step * 1e-9 ? 0.0 : v;
    return fmt::format("{:.{}f}", rounded, decimals);
}

class Canvas {
public:
    explicit Canvas(const std::string& title) {
        out_ = fmt::format(
            "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{0}\" height=\"{1}\" viewBox=\"0 0 {0} {1}\" "
            "font-family=\"sans-serif\" font-size=\"11\">\n"
            "<rect width=\"{0}\" height=\"{1}\" fill=\"white\"/>\n"
            "<text x=\"{2}\" y=\"22\" text-anchor=\"middle\" font-size=\"14\">{3}</text>\n",
            num(kWidth), num(kHeight), num(kWidth / 2), escape(title));
    }

    void raw(const std::string& s) { out_ += s; }

    void line(double x1, double y1, double x2, double y2, const char* stroke, const char* extra = "") {
        out_ += fmt::format("<line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"{}\"{}/>\n", num(x1), num(y1),
                            num(x2), num(y2), stroke, extra);
    }

    void rect(double x, double y, double w, double h, const char* fill, const char* stroke = "none") {
        out_ += fmt::format("<rect x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\" fill=\"{}\" stroke=\"{}\"/>\n",
                            num(x), num(y), num(w), num(std::max(h, 0.0)), fill, stroke);
    }

    void text(double x, double y, std::string_view s, const char* anchor = "middle", const char* extra = "") {
        out_ += fmt::format("<text x=\"{}\" y=\"{}\" text-anchor=\"{}\"{}>{}</text>\n", num(x), num(y), anchor,
                            extra, escape(s));
    }

    void circle(double x, double y, double r, const char* fill, const char* extra = "") {
        out_ += fmt::format("<circle cx=\"{}\" cy=\"{}\" r=\"{}\" fill=\"{}\"{}/>\n", num(x), num(y), num(r), fill,
                            extra);
    }

    std::string finish() {
        out_ += "</svg>\n";
        return std::move(out_);
    }

private:
    std::string out_;
};

constexpr double plot_w() { return kWidth - kLeft - kRight; }
constexpr double plot_h() { return kHeight - kTop - kBottom; }

double map_y(const Range& r, double v) { return kTop + plot_h() * (1.0 - (v - r.lo) / (r.hi - r.lo)); }
double map_x(const Range& r, double v) { return kLeft + plot_w() * (v - r.lo) / (r.hi - r.lo); }

void y_axis(Canvas& c, const Range& r, const std::string& label) {
    const double step = tick_step(r);
    for (double t = std::ceil(r.lo / step) * step; t <= r.hi + step * 1e-9; t += step) {
        const double y = map_y(r, t);
        c.line(kLeft, y, kLeft + plot_w(), y, "#e0e0e0");
        c.text(kLeft - 6, y + 4, format_tick(t, step), "end");
    }
    c.line(kLeft, kTop, kLeft, kTop + plot_h(), "black");
    c.line(kLeft, kTop + plot_h(), kLeft + plot_w(), kTop + plot_h(), "black");
    c.text(18, kTop + plot_h() / 2, label, "middle",
           fmt::format(" transform=\"rotate(-90 18 {})\"", num(kTop + plot_h() / 2)).c_str());
}

void x_ticks(Canvas& c, const Range& r, const std::string& label) {
    const double step = tick_step(r);
    for (double t = std::ceil(r.lo / step) * step; t <= r.hi + step * 1e-9; t += step) {
        const double x = map_x(r, t);
        c.line(x, kTop, x, kTop + plot_h(), "#e0e0e0");
        c.text(x, kTop + plot_h() + 16, format_tick(t, step));
    }
    c.text(kLeft + plot_w() / 2, kHeight - 20, label);
}

// Category labels under slot centres, rotated when crowded.
void x_categories(Canvas& c, std::span<const std::string> labels, double slot) {
    const bool rotate = slot < 60;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        const double x = kLeft + slot * (static_cast<double>(i) + 0.5);
        const double y = kTop + plot_h() + 16;
        if (rotate) {
            c.text(x, y, labels[i], "end", fmt::format(" transform=\"rotate(-40 {} {})\"", num(x), num(y)).c_str());
        } else {
            c.text(x, y, labels[i]);
        }
    }
}

std::pair<double, double> finite_extent(std::span<const double> v) {
    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    for (double x : v) {
        if (std::isfinite(x)) {
            lo = std::min(lo, x);
            hi = std::max(hi, x);
        }
    }
    return {lo, hi};
}

}  // namespace

std::string svg_boxplot(const std::string& title, std::span<const BoxSeries> series, const AxisSpec& y) {
    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    for (const auto& s : series) {
        const auto [a, b] = finite_extent(s.values);
        lo = std::min(lo, a);
        hi = std::max(hi, b);
    }
    const Range r = resolve(y, lo, hi);
    Canvas c(title);
    y_axis(c, r, y.label);
    const double slot = plot_w() / static_cast<double>(std::max<std::size_t>(series.size(), 1));
    const double box_w = std::min(50.0, slot * 0.6);
    std::vector<std::string> labels;
    for (std::size_t i = 0; i < series.size(); ++i) {
        labels.push_back(series[i].label);
        std::vector<double> v;
        std::copy_if(series[i].values.begin(), series[i].values.end(), std::back_inserter(v),
                     [](double x) { return std::isfinite(x); });
        if (v.empty()) {
            continue;
        }
        std::sort(v.begin(), v.end());
        const double q1 = quantile(v, 0.25);
        const double med = quantile(v, 0.5);
        const double q3 = quantile(v, 0.75);
        const double fence_lo = q1 - 1.5 * (q3 - q1);
        const double fence_hi = q3 + 1.5 * (q3 - q1);
        const double w_lo = *std::find_if(v.begin(), v.end(), [&](double x) { return x >= fence_lo; });
        const double w_hi = *std::find_if(v.rbegin(), v.rend(), [&](double x) { return x <= fence_hi; });
        const double cx = kLeft + slot * (static_cast<double>(i) + 0.5);
        c.line(cx, map_y(r, w_lo), cx, map_y(r, q1), "black");
        c.line(cx, map_y(r, q3), cx, map_y(r, w_hi), "black");
        c.line(cx - box_w / 4, map_y(r, w_lo), cx + box_w / 4, map_y(r, w_lo), "black");
        c.line(cx - box_w / 4, map_y(r, w_hi), cx + box_w / 4, map_y(r, w_hi), "black");
        c.rect(cx - box_w / 2, map_y(r, q3), box_w, map_y(r, q1) - map_y(r, q3), colour(i), "black");
        c.line(cx - box_w / 2, map_y(r, med), cx + box_w / 2, map_y(r, med), "black", " stroke-width=\"2\"");
        for (double x : v) {
            if (x < w_lo || x > w_hi) {
                c.circle(cx, map_y(r, x), 2.5, "none", " stroke=\"black\"");
            }
        }
    }
    x_categories(c, labels, slot);
    return c.finish();
}

std::string svg_scatter(const std::string& title, std::span<const double> x, std::span<const double> y,
                        const AxisSpec& x_axis, const AxisSpec& y_axis_spec, bool identity_line) {
    if (x.size() != y.size()) {
        throw LengthMismatch(fmt::format("scatter with {} x and {} y values", x.size(), y.size()));
    }
    const auto [xl, xh] = finite_extent(x);
    const auto [yl, yh] = finite_extent(y);
    const Range rx = resolve(x_axis, xl, xh);
    const Range ry = resolve(y_axis_spec, yl, yh);
    Canvas c(title);
    y_axis(c, ry, y_axis_spec.label);
    x_ticks(c, rx, x_axis.label);
    if (identity_line) {
        const double a = std::max(rx.lo, ry.lo);
        const double b = std::min(rx.hi, ry.hi);
        if (a < b) {
            c.line(map_x(rx, a), map_y(ry, a), map_x(rx, b), map_y(ry, b), "#888888",
                   " stroke-dasharray=\"4 3\"");
        }
    }
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (std::isfinite(x[i]) && std::isfinite(y[i])) {
            c.circle(map_x(rx, x[i]), map_y(ry, y[i]), 2.5, colour(0), " fill-opacity=\"0.6\"");
        }
    }
    return c.finish();
}

std::string svg_grouped_bars(const std::string& title, std::span<const std::string> series,
                             std::span<const BarGroup> groups, const AxisSpec& y) {
    double hi = 0.0;
    for (const auto& g : groups) {
        if (g.values.size() != series.size()) {
            throw LengthMismatch(fmt::format("bar group {} has {} values for {} series", g.label, g.values.size(),
                                             series.size()));
        }
        for (double v : g.values) {
            hi = std::max(hi, v);
        }
    }
    const Range r = resolve(y, 0.0, hi == 0.0 ? 1.0 : hi * 1.05);
    Canvas c(title);
    y_axis(c, r, y.label);
    const double slot = plot_w() / static_cast<double>(std::max<std::size_t>(groups.size(), 1));
    const double bar_w = slot * 0.8 / static_cast<double>(std::max<std::size_t>(series.size(), 1));
    std::vector<std::string> labels;
    for (std::size_t g = 0; g < groups.size(); ++g) {
        labels.push_back(groups[g].label);
        const double x0 = kLeft + slot * static_cast<double>(g) + slot * 0.1;
        for (std::size_t s = 0; s < series.size(); ++s) {
            const double v = groups[g].values[s];
            const double top = map_y(r, std::min(v, r.hi));
            c.rect(x0 + bar_w * static_cast<double>(s), top, bar_w, map_y(r, std::max(r.lo, 0.0)) - top,
                   colour(s));
        }
    }
    x_categories(c, labels, slot);
    // Legend in the top-right corner.
    for (std::size_t s = 0; s < series.size(); ++s) {
        const double ly = kTop + 4 + 14 * static_cast<double>(s);
        c.rect(kWidth - kRight - 110, ly, 10, 10, colour(s));
        c.text(kWidth - kRight - 95, ly + 9, series[s], "start");
    }
    return c.finish();
}

std::string svg_heatmap(const std::string& title, std::span<const std::string> row_labels,
                        std::span<const std::string> col_labels, const std::vector<std::vector<double>>& matrix,
                        const std::string& row_axis, const std::string& col_axis) {
    if (matrix.size() != row_labels.size()) {
        throw ShapeError(fmt::format("heatmap has {} rows for {} labels", matrix.size(), row_labels.size()));
    }
    for (const auto& row : matrix) {
        if (row.size() != col_labels.size()) {
            throw ShapeError(fmt::format("heatmap row has {} cells for {} labels", row.size(), col_labels.size()));
        }
    }
    Canvas c(title);
    const double left = kLeft + 40;
    const double cell_w = (kWidth - left - kRight) / static_cast<double>(std::max<std::size_t>(col_labels.size(), 1));
    const double cell_h = plot_h() / static_cast<double>(std::max<std::size_t>(row_labels.size(), 1));
    for (std::size_t r = 0; r < matrix.size(); ++r) {
        double total = 0.0;
        for (double v : matrix[r]) {
            total += v;
        }
        const double y = kTop + cell_h * static_cast<double>(r);
        c.text(left - 6, y + cell_h / 2 + 4, row_labels[r], "end");
        for (std::size_t k = 0; k < matrix[r].size(); ++k) {
            const double share = total > 0.0 ? matrix[r][k] / total : 0.0;
            const int shade = static_cast<int>(std::lround(255.0 * (1.0 - share)));
            const std::string fill = fmt::format("rgb({},{},255)", shade, shade);
            const double x = left + cell_w * static_cast<double>(k);
            c.rect(x, y, cell_w, cell_h, fill.c_str(), "#ffffff");
            c.text(x + cell_w / 2, y + cell_h / 2 + 4, fmt::format("{:g}", matrix[r][k]), "middle",
                   share > 0.5 ? " fill=\"white\"" : "");
        }
    }
    for (std::size_t k = 0; k < col_labels.size(); ++k) {
        const double x = left + cell_w * (static_cast<double>(k) + 0.5);
        const double y = kTop + plot_h() + 16;
        c.text(x, y, col_labels[k], "end", fmt::format(" transform=\"rotate(-30 {} {})\"", num(x), num(y)).c_str());
    }
    c.text(left + (kWidth - left - kRight) / 2, kHeight - 10, col_axis);
    c.text(14, kTop + plot_h() / 2, row_axis, "middle",
           fmt::format(" transform=\"rotate(-90 14 {})\"", num(kTop + plot_h() / 2)).c_str());
    return c.finish();
}

}  // namespace uab
