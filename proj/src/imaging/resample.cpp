#include <algorithm>
#include <cmath>
#include <numbers>

#include <fmt/format.h>

#include "uab/error.hpp"
#include "uab/imaging.hpp"

namespace uab {

namespace {

constexpr double kLobes = 3.0;

// Normalized taps contributing to one output sample. Source indices are
// already clamped into range, so an edge pixel may appear more than once.
struct Taps {
    std::vector<int> index;
    std::vector<double> weight;
};

std::vector<Taps> compute_taps(int in_size, int out_size) {
    const double scale = static_cast<double>(in_size) / out_size;
    const double stretch = std::max(scale, 1.0);
    const double support = kLobes * stretch;

    std::vector<Taps> taps(static_cast<std::size_t>(out_size));
    for (int d = 0; d < out_size; ++d) {
        const double center = (d + 0.5) * scale - 0.5;
        const int lo = static_cast<int>(std::ceil(center - support));
        const int hi = static_cast<int>(std::floor(center + support));
        Taps& t = taps[static_cast<std::size_t>(d)];
        double total = 0.0;
        for (int i = lo; i <= hi; ++i) {
            const double w = lanczos3((i - center) / stretch);
            if (w == 0.0) {
                continue;
            }
            t.index.push_back(std::clamp(i, 0, in_size - 1));
            t.weight.push_back(w);
            total += w;
        }
        for (double& w : t.weight) {
            w /= total;
        }
    }
    return taps;
}

}  // namespace

double lanczos3(double x) noexcept {
    x = std::abs(x);
    if (x == 0.0) {
        return 1.0;
    }
    if (x >= kLobes || x == std::floor(x)) {
        return 0.0;
    }
    const double px = std::numbers::pi * x;
    return kLobes * std::sin(px) * std::sin(px / kLobes) / (px * px);
}

ImageBuffer resize_lanczos(const ImageBuffer& img, int out_width, int out_height) {
    if (out_width < 1 || out_height < 1) {
        throw InvalidDimension(fmt::format("resize target must be positive, got {}x{}", out_width, out_height));
    }
    if (img.empty()) {
        throw InvalidDimension("cannot resize an empty image");
    }
    const int in_w = img.width();
    const int in_h = img.height();
    const int ch = img.channels();
    const auto htaps = compute_taps(in_w, out_width);
    const auto vtaps = compute_taps(in_h, out_height);

    // Horizontal pass into a double buffer of out_width x in_h.
    std::vector<double> tmp(static_cast<std::size_t>(out_width) * in_h * ch);
    for (int y = 0; y < in_h; ++y) {
        for (int x = 0; x < out_width; ++x) {
            const Taps& t = htaps[static_cast<std::size_t>(x)];
            for (int c = 0; c < ch; ++c) {
                double acc = 0.0;
                for (std::size_t k = 0; k < t.index.size(); ++k) {
                    acc += t.weight[k] * img.at(t.index[k], y, c);
                }
                tmp[(static_cast<std::size_t>(y) * out_width + x) * ch + c] = acc;
            }
        }
    }

    ImageBuffer out(out_width, out_height, img.format());
    const bool eight_bit = img.format() != PixelFormat::GRAYF;
    for (int y = 0; y < out_height; ++y) {
        const Taps& t = vtaps[static_cast<std::size_t>(y)];
        for (int x = 0; x < out_width; ++x) {
            for (int c = 0; c < ch; ++c) {
                double acc = 0.0;
                for (std::size_t k = 0; k < t.index.size(); ++k) {
                    acc += t.weight[k] * tmp[(static_cast<std::size_t>(t.index[k]) * out_width + x) * ch + c];
                }
                const std::size_t o = (static_cast<std::size_t>(y) * out_width + x) * ch + c;
                if (eight_bit) {
                    out.bytes()[o] = static_cast<std::uint8_t>(std::round(std::clamp(acc, 0.0, 255.0)));
                } else {
                    out.floats()[o] = static_cast<float>(acc);
                }
            }
        }
    }
    return out;
}

}  // namespace uab
