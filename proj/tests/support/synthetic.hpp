#pragma once

// Synthetic images and naive reference filters shared by the test suites.
// Nothing here calls into the library beyond the ImageBuffer type.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "uab/imaging.hpp"

namespace uab::testing {

inline ImageBuffer random_rgb(int w, int h, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::vector<std::uint8_t> px(static_cast<std::size_t>(w) * h * 3);
    for (auto& p : px) {
        p = static_cast<std::uint8_t>(rng() & 0xFF);
    }
    return ImageBuffer::from_bytes(w, h, PixelFormat::RGB8, std::move(px));
}

inline ImageBuffer random_luma(int w, int h, std::uint64_t seed, double lo = 0.0, double hi = 255.0) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> dist(lo, hi);
    std::vector<float> px(static_cast<std::size_t>(w) * h);
    for (auto& p : px) {
        p = static_cast<float>(dist(rng));
    }
    return ImageBuffer::from_floats(w, h, std::move(px));
}

inline ImageBuffer constant_rgb(int w, int h, std::uint8_t r, std::uint8_t g, std::uint8_t b) {
    std::vector<std::uint8_t> px(static_cast<std::size_t>(w) * h * 3);
    for (std::size_t i = 0; i < px.size(); i += 3) {
        px[i] = r;
        px[i + 1] = g;
        px[i + 2] = b;
    }
    return ImageBuffer::from_bytes(w, h, PixelFormat::RGB8, std::move(px));
}

inline ImageBuffer constant_luma(int w, int h, float v) {
    return ImageBuffer::from_floats(w, h, std::vector<float>(static_cast<std::size_t>(w) * h, v));
}

/// Vertical stripes alternating 0 / 255 every `period` columns: ideal
/// one-pixel step edges running top to bottom.
inline ImageBuffer stripes_luma(int w, int h, int period, float lo = 0.0f, float hi = 255.0f) {
    std::vector<float> px(static_cast<std::size_t>(w) * h);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            px[static_cast<std::size_t>(y) * w + x] = ((x / period) % 2 == 0) ? lo : hi;
        }
    }
    return ImageBuffer::from_floats(w, h, std::move(px));
}

/// Normalized sampled Gaussian with radius ceil(3 sigma).
inline std::vector<double> gaussian_taps(double sigma) {
    const int r = static_cast<int>(std::ceil(3.0 * sigma));
    std::vector<double> k(static_cast<std::size_t>(2 * r + 1));
    double total = 0.0;
    for (int i = -r; i <= r; ++i) {
        k[static_cast<std::size_t>(i + r)] = std::exp(-0.5 * i * i / (sigma * sigma));
        total += k[static_cast<std::size_t>(i + r)];
    }
    for (auto& v : k) {
        v /= total;
    }
    return k;
}

/// Direct 2-D Gaussian convolution with clamped borders (no separability
/// shortcut), float output.
inline ImageBuffer gaussian_blur_naive(const ImageBuffer& img, double sigma) {
    const auto k1 = gaussian_taps(sigma);
    const int r = static_cast<int>(k1.size() / 2);
    const int w = img.width();
    const int h = img.height();
    std::vector<float> out(static_cast<std::size_t>(w) * h);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            double acc = 0.0;
            for (int dy = -r; dy <= r; ++dy) {
                for (int dx = -r; dx <= r; ++dx) {
                    const int sx = std::clamp(x + dx, 0, w - 1);
                    const int sy = std::clamp(y + dy, 0, h - 1);
                    acc += k1[static_cast<std::size_t>(dx + r)] * k1[static_cast<std::size_t>(dy + r)] *
                           img.at(sx, sy);
                }
            }
            out[static_cast<std::size_t>(y) * w + x] = static_cast<float>(acc);
        }
    }
    return ImageBuffer::from_floats(w, h, std::move(out));
}

inline ImageBuffer rotate180(const ImageBuffer& img) {
    const int w = img.width();
    const int h = img.height();
    std::vector<float> out(static_cast<std::size_t>(w) * h);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            out[static_cast<std::size_t>(h - 1 - y) * w + (w - 1 - x)] = img.at(x, y);
        }
    }
    return ImageBuffer::from_floats(w, h, std::move(out));
}

/// Smooth random texture: white noise blurred with sigma, rescaled to [0,255].
inline ImageBuffer texture_luma(int w, int h, std::uint64_t seed, double sigma) {
    auto blurred = gaussian_blur_naive(random_luma(w, h, seed), sigma);
    auto px = blurred.floats();
    const auto [mn, mx] = std::minmax_element(px.begin(), px.end());
    const float lo = *mn;
    const float span = std::max(*mx - lo, 1e-6f);
    std::vector<float> out(px.size());
    std::transform(px.begin(), px.end(), out.begin(), [&](float v) { return 255.0f * (v - lo) / span; });
    return ImageBuffer::from_floats(w, h, std::move(out));
}

}  // namespace uab::testing
