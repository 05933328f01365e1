#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "uab/error.hpp"
#include "uab/features.hpp"

namespace uab {

namespace {

constexpr int kBlockSize = 64;
constexpr double kEdgeBlockFraction = 0.002;
constexpr double kContrastThreshold = 50.0;
constexpr double kJnbLowContrast = 5.0;
constexpr double kJnbHighContrast = 3.0;
constexpr double kBeta = 3.6;
constexpr double kSharpProbability = 0.63;

// Walk from `x` along the row while the profile keeps moving away from the
// edge; returns the extremum positions (low side, high side) for a rising edge.
std::pair<int, int> bracket_rising(std::span<const float> row, int x) {
    int lo = x;
    while (lo > 0 && row[lo - 1] < row[lo]) {
        --lo;
    }
    int hi = x;
    while (hi + 1 < static_cast<int>(row.size()) && row[hi + 1] > row[hi]) {
        ++hi;
    }
    return {lo, hi};
}

std::pair<int, int> bracket_falling(std::span<const float> row, int x) {
    int lo = x;
    while (lo > 0 && row[lo - 1] > row[lo]) {
        --lo;
    }
    int hi = x;
    while (hi + 1 < static_cast<int>(row.size()) && row[hi + 1] < row[hi]) {
        ++hi;
    }
    return {lo, hi};
}

}  // namespace

EdgeMap detect_edges(const ImageBuffer& luma) {
    if (luma.format() != PixelFormat::GRAYF) {
        throw FormatError("edge detection expects a GRAYF luma image");
    }
    const int w = luma.width();
    const int h = luma.height();
    if (w < 3 || h < 3) {
        throw TooSmall(fmt::format("edge detection needs at least 3x3, got {}x{}", w, h));
    }
    const auto px = luma.floats();
    auto at = [&](int x, int y) { return static_cast<double>(px[static_cast<std::size_t>(y) * w + x]); };

    // Squared horizontal Sobel response on the interior; border stays 0.
    std::vector<double> response(static_cast<std::size_t>(w) * h, 0.0);
    std::vector<double> gx(static_cast<std::size_t>(w) * h, 0.0);
    double sum = 0.0;
    for (int y = 1; y < h - 1; ++y) {
        for (int x = 1; x < w - 1; ++x) {
            const double g = (at(x + 1, y - 1) + 2.0 * at(x + 1, y) + at(x + 1, y + 1)) -
                             (at(x - 1, y - 1) + 2.0 * at(x - 1, y) + at(x - 1, y + 1));
            const std::size_t i = static_cast<std::size_t>(y) * w + x;
            gx[i] = g;
            response[i] = g * g;
            sum += g * g;
        }
    }
    const double cutoff = 4.0 * sum / (static_cast<double>(w - 2) * (h - 2));

    EdgeMap map;
    map.width = w;
    map.height = h;
    map.edge_width.assign(static_cast<std::size_t>(w) * h, 0.0f);
    for (int y = 1; y < h - 1; ++y) {
        const std::span<const float> row = px.subspan(static_cast<std::size_t>(y) * w, static_cast<std::size_t>(w));
        for (int x = 1; x < w - 1; ++x) {
            const std::size_t i = static_cast<std::size_t>(y) * w + x;
            const double b = response[i];
            if (!(b > cutoff && b > response[i - 1] && b >= response[i + 1])) {
                continue;
            }
            const auto [lo, hi] = gx[i] > 0.0 ? bracket_rising(row, x) : bracket_falling(row, x);
            if (hi > lo) {
                map.edge_width[i] = static_cast<float>(hi - lo);
                ++map.edge_count;
            }
        }
    }
    return map;
}

CpbdResult cpbd_detailed(const ImageBuffer& luma) {
    CpbdResult result;
    if (luma.width() < kBlockSize || luma.height() < kBlockSize) {
        result.no_edges = true;
        return result;
    }
    const EdgeMap edges = detect_edges(luma);
    const int w = luma.width();
    const auto px = luma.floats();
    const double min_edges = kEdgeBlockFraction * kBlockSize * kBlockSize;

    std::size_t sharp = 0;
    for (int by = 0; by + kBlockSize <= luma.height(); by += kBlockSize) {
        for (int bx = 0; bx + kBlockSize <= w; bx += kBlockSize) {
            std::size_t count = 0;
            float lo = px[static_cast<std::size_t>(by) * w + bx];
            float hi = lo;
            for (int y = by; y < by + kBlockSize; ++y) {
                for (int x = bx; x < bx + kBlockSize; ++x) {
                    const std::size_t i = static_cast<std::size_t>(y) * w + x;
                    count += edges.edge_width[i] > 0.0f ? 1 : 0;
                    lo = std::min(lo, px[i]);
                    hi = std::max(hi, px[i]);
                }
            }
            if (static_cast<double>(count) <= min_edges) {
                continue;
            }
            ++result.edge_blocks;
            const double jnb = (hi - lo) <= kContrastThreshold ? kJnbLowContrast : kJnbHighContrast;
            for (int y = by; y < by + kBlockSize; ++y) {
                for (int x = bx; x < bx + kBlockSize; ++x) {
                    const float width = edges.edge_width[static_cast<std::size_t>(y) * w + x];
                    if (width <= 0.0f) {
                        continue;
                    }
                    ++result.edge_pixels;
                    const double p_blur = 1.0 - std::exp(-std::pow(width / jnb, kBeta));
                    sharp += p_blur <= kSharpProbability ? 1 : 0;
                }
            }
        }
    }
    if (result.edge_pixels == 0) {
        result.no_edges = true;
        return result;
    }
    result.value = static_cast<double>(sharp) / static_cast<double>(result.edge_pixels);
    return result;
}

double cpbd(const ImageBuffer& luma) { return cpbd_detailed(luma).value; }

double blur_strength(const ImageBuffer& luma) {
    const EdgeMap edges = detect_edges(luma);
    if (edges.edge_count == 0) {
        return 0.0;
    }
    double total = 0.0;
    for (float v : edges.edge_width) {
        total += v;
    }
    return total / static_cast<double>(edges.edge_count);
}

}  // namespace uab
