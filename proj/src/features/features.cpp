#include "uab/features.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "uab/error.hpp"

namespace uab {

namespace {

void require_luma(const ImageBuffer& img, int min_size, std::string_view what) {
    if (img.format() != PixelFormat::GRAYF) {
        throw FormatError(fmt::format("{} expects a GRAYF luma image", what));
    }
    if (img.width() < min_size || img.height() < min_size) {
        throw TooSmall(fmt::format("{} needs at least {}x{}, got {}x{}", what, min_size, min_size, img.width(),
                                   img.height()));
    }
}

void require_rgb(const ImageBuffer& img, std::string_view what) {
    if (img.format() != PixelFormat::RGB8) {
        throw FormatError(fmt::format("{} expects an RGB8 image", what));
    }
}

double median_in_place(std::vector<double>& v) {
    const std::size_t mid = v.size() / 2;
    std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid), v.end());
    const double upper = v[mid];
    if (v.size() % 2 == 1) {
        return upper;
    }
    const double lower = *std::max_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid));
    return 0.5 * (lower + upper);
}

// One-dimensional box average over 2*radius+1 taps with clamped borders.
std::vector<double> box_filter(std::span<const float> px, int w, int h, int radius, bool vertical) {
    std::vector<double> out(px.size());
    const double norm = 1.0 / (2 * radius + 1);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            double acc = 0.0;
            for (int k = -radius; k <= radius; ++k) {
                const int sx = vertical ? x : std::clamp(x + k, 0, w - 1);
                const int sy = vertical ? std::clamp(y + k, 0, h - 1) : y;
                acc += px[static_cast<std::size_t>(sy) * w + sx];
            }
            out[static_cast<std::size_t>(y) * w + x] = acc * norm;
        }
    }
    return out;
}

}  // namespace

std::array<std::optional<double>, 10> FeatureVector::values() const {
    return {cpbd, si, fft, noise, blur, blur_strength, saturation, colorfulness, contrast, tone};
}

void FeatureVector::set(std::size_t index, std::optional<double> value) {
    std::optional<double>* slots[] = {&cpbd, &si, &fft, &noise, &blur, &blur_strength,
                                      &saturation, &colorfulness, &contrast, &tone};
    if (index >= std::size(slots)) {
        throw ShapeError(fmt::format("feature index {} out of range", index));
    }
    *slots[index] = value;
}

double spatial_information(const ImageBuffer& luma) {
    require_luma(luma, 3, "si");
    const int w = luma.width();
    const int h = luma.height();
    auto at = [&](int x, int y) { return static_cast<double>(luma.floats()[static_cast<std::size_t>(y) * w + x]); };
    double sum = 0.0;
    double sum_sq = 0.0;
    const double n = static_cast<double>(w - 2) * (h - 2);
    std::vector<double> mags;
    mags.reserve(static_cast<std::size_t>(n));
    for (int y = 1; y < h - 1; ++y) {
        for (int x = 1; x < w - 1; ++x) {
            const double gx = (at(x + 1, y - 1) + 2 * at(x + 1, y) + at(x + 1, y + 1)) -
                              (at(x - 1, y - 1) + 2 * at(x - 1, y) + at(x - 1, y + 1));
            const double gy = (at(x - 1, y + 1) + 2 * at(x, y + 1) + at(x + 1, y + 1)) -
                              (at(x - 1, y - 1) + 2 * at(x, y - 1) + at(x + 1, y - 1));
            const double m = std::sqrt(gx * gx + gy * gy);
            mags.push_back(m);
            sum += m;
        }
    }
    const double mean = sum / n;
    for (double m : mags) {
        sum_sq += (m - mean) * (m - mean);
    }
    return std::sqrt(sum_sq / n);
}

double colorfulness(const ImageBuffer& rgb) {
    require_rgb(rgb, "colorfulness");
    const auto px = rgb.bytes();
    const std::size_t n = px.size() / 3;
    double mean_rg = 0.0;
    double mean_yb = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double r = px[3 * i];
        const double g = px[3 * i + 1];
        const double b = px[3 * i + 2];
        mean_rg += r - g;
        mean_yb += 0.5 * (r + g) - b;
    }
    mean_rg /= static_cast<double>(n);
    mean_yb /= static_cast<double>(n);
    double var_rg = 0.0;
    double var_yb = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double r = px[3 * i];
        const double g = px[3 * i + 1];
        const double b = px[3 * i + 2];
        const double drg = (r - g) - mean_rg;
        const double dyb = (0.5 * (r + g) - b) - mean_yb;
        var_rg += drg * drg;
        var_yb += dyb * dyb;
    }
    var_rg /= static_cast<double>(n);
    var_yb /= static_cast<double>(n);
    return std::sqrt(var_rg + var_yb) + 0.3 * std::sqrt(mean_rg * mean_rg + mean_yb * mean_yb);
}

double blur(const ImageBuffer& luma) {
    require_luma(luma, 9, "blur");
    const int w = luma.width();
    const int h = luma.height();
    const auto px = luma.floats();
    const auto blur_v = box_filter(px, w, h, 4, true);
    const auto blur_h = box_filter(px, w, h, 4, false);

    double sum_v = 0.0;
    double kept_v = 0.0;
    double sum_h = 0.0;
    double kept_h = 0.0;
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            const std::size_t i = static_cast<std::size_t>(y) * w + x;
            if (y > 0) {
                const std::size_t up = i - static_cast<std::size_t>(w);
                const double d_orig = std::abs(static_cast<double>(px[i]) - px[up]);
                const double d_blur = std::abs(blur_v[i] - blur_v[up]);
                sum_v += d_orig;
                kept_v += std::max(0.0, d_orig - d_blur);
            }
            if (x > 0) {
                const double d_orig = std::abs(static_cast<double>(px[i]) - px[i - 1]);
                const double d_blur = std::abs(blur_h[i] - blur_h[i - 1]);
                sum_h += d_orig;
                kept_h += std::max(0.0, d_orig - d_blur);
            }
        }
    }
    const double b_v = sum_v > 0.0 ? (sum_v - kept_v) / sum_v : 0.0;
    const double b_h = sum_h > 0.0 ? (sum_h - kept_h) / sum_h : 0.0;
    return std::clamp(std::max(b_v, b_h), 0.0, 1.0);
}

namespace {

// Separable Gaussian with clamped borders, kept in double.
std::vector<double> gaussian_smooth(std::span<const float> px, int w, int h, double sigma) {
    const int radius = static_cast<int>(std::ceil(3.0 * sigma));
    std::vector<double> taps(static_cast<std::size_t>(2 * radius + 1));
    double total = 0.0;
    for (int k = -radius; k <= radius; ++k) {
        const double v = std::exp(-0.5 * k * k / (sigma * sigma));
        taps[static_cast<std::size_t>(k + radius)] = v;
        total += v;
    }
    for (double& t : taps) {
        t /= total;
    }
    std::vector<double> tmp(px.size());
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            double acc = 0.0;
            for (int k = -radius; k <= radius; ++k) {
                acc += taps[static_cast<std::size_t>(k + radius)] *
                       px[static_cast<std::size_t>(y) * w + std::clamp(x + k, 0, w - 1)];
            }
            tmp[static_cast<std::size_t>(y) * w + x] = acc;
        }
    }
    std::vector<double> out(px.size());
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            double acc = 0.0;
            for (int k = -radius; k <= radius; ++k) {
                acc += taps[static_cast<std::size_t>(k + radius)] *
                       tmp[static_cast<std::size_t>(std::clamp(y + k, 0, h - 1)) * w + x];
            }
            out[static_cast<std::size_t>(y) * w + x] = acc;
        }
    }
    return out;
}

}  // namespace

ImageBuffer gaussian_blur(const ImageBuffer& luma, double sigma) {
    if (luma.format() != PixelFormat::GRAYF) {
        throw FormatError("gaussian blur expects a GRAYF luma image");
    }
    const auto smooth = gaussian_smooth(luma.floats(), luma.width(), luma.height(), sigma);
    return ImageBuffer::from_floats(luma.width(), luma.height(), std::vector<float>(smooth.begin(), smooth.end()));
}

double noise(const ImageBuffer& luma) {
    require_luma(luma, 9, "noise");
    const auto px = luma.floats();
    const auto sm = gaussian_smooth(px, luma.width(), luma.height(), 1.5);
    std::vector<double> residual(px.size());
    for (std::size_t i = 0; i < px.size(); ++i) {
        residual[i] = static_cast<double>(px[i]) - sm[i];
    }
    std::vector<double> work = residual;
    const double med = median_in_place(work);
    for (std::size_t i = 0; i < residual.size(); ++i) {
        work[i] = std::abs(residual[i] - med);
    }
    return 1.4826 * median_in_place(work);
}

BasicStats basic_stats(const ImageBuffer& rgb) {
    require_rgb(rgb, "basic stats");
    const auto px = rgb.bytes();
    const std::size_t n = px.size() / 3;
    double sum_luma = 0.0;
    double sum_sat = 0.0;
    std::vector<double> luma(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double r = px[3 * i];
        const double g = px[3 * i + 1];
        const double b = px[3 * i + 2];
        luma[i] = 0.299 * r + 0.587 * g + 0.114 * b;
        sum_luma += luma[i];
        const double mx = std::max({r, g, b});
        const double mn = std::min({r, g, b});
        sum_sat += mx > 0.0 ? (mx - mn) / mx : 0.0;
    }
    const double mean = sum_luma / static_cast<double>(n);
    double var = 0.0;
    for (double l : luma) {
        var += (l - mean) * (l - mean);
    }
    var /= static_cast<double>(n);
    BasicStats s;
    s.contrast = std::clamp(std::sqrt(var) / 255.0, 0.0, 1.0);
    s.saturation = std::clamp(sum_sat / static_cast<double>(n), 0.0, 1.0);
    s.tone = std::clamp(mean / 255.0, 0.0, 1.0);
    return s;
}

FeatureVector extract_features(const ImageBuffer& img, std::string stimulus_id) {
    FeatureVector fv;
    fv.stimulus_id = std::move(stimulus_id);
    const ImageBuffer luma = to_luma(img);

    auto guarded = [&](std::string_view name, auto&& fn) -> std::optional<double> {
        try {
            const double v = fn();
            if (!std::isfinite(v)) {
                fv.diagnostics.push_back(fmt::format("{}: non-finite result", name));
                return std::nullopt;
            }
            return v;
        } catch (const Error& e) {
            fv.diagnostics.push_back(fmt::format("{}: {}", name, e.what()));
            return std::nullopt;
        }
    };

    fv.cpbd = guarded("cpbd", [&] {
        const auto r = cpbd_detailed(luma);
        if (r.no_edges) {
            fv.diagnostics.emplace_back("cpbd: no edge blocks");
        }
        return r.value;
    });
    fv.si = guarded("si", [&] { return spatial_information(luma); });
    fv.fft = guarded("fft", [&] { return fft_feature(luma); });
    fv.noise = guarded("noise", [&] { return noise(luma); });
    fv.blur = guarded("blur", [&] { return blur(luma); });
    fv.blur_strength = guarded("blur_strength", [&] { return blur_strength(luma); });

    if (img.format() == PixelFormat::RGB8) {
        std::optional<BasicStats> stats;
        try {
            stats = basic_stats(img);
        } catch (const Error& e) {
            fv.diagnostics.push_back(fmt::format("basic_stats: {}", e.what()));
        }
        if (stats) {
            fv.contrast = stats->contrast;
            fv.saturation = stats->saturation;
            fv.tone = stats->tone;
        }
        fv.colorfulness = guarded("colorfulness", [&] { return colorfulness(img); });
    } else {
        // Gray input has no chroma.
        double mean = 0.0;
        for (float v : luma.floats()) {
            mean += v;
        }
        mean /= static_cast<double>(luma.floats().size());
        double var = 0.0;
        for (float v : luma.floats()) {
            var += (v - mean) * (v - mean);
        }
        var /= static_cast<double>(luma.floats().size());
        fv.contrast = std::clamp(std::sqrt(var) / 255.0, 0.0, 1.0);
        fv.tone = std::clamp(mean / 255.0, 0.0, 1.0);
        fv.saturation = 0.0;
        fv.colorfulness = 0.0;
    }
    return fv;
}

}  // namespace uab
