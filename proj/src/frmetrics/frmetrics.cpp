#include "uab/frmetrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>

#include <fmt/format.h>

#include "uab/error.hpp"

namespace uab {

namespace {

constexpr int kWindow = 11;
constexpr double kSigma = 1.5;
constexpr double kC1 = (0.01 * 255.0) * (0.01 * 255.0);
constexpr double kC2 = (0.03 * 255.0) * (0.03 * 255.0);

void check_pair(const ImageBuffer& a, const ImageBuffer& b, int min_size, const char* what) {
    if (a.format() != PixelFormat::GRAYF || b.format() != PixelFormat::GRAYF) {
        throw FormatError(fmt::format("{} expects GRAYF luma images", what));
    }
    if (a.width() != b.width() || a.height() != b.height()) {
        throw DimensionMismatch(fmt::format("{}: {}x{} vs {}x{}", what, a.width(), a.height(), b.width(), b.height()));
    }
    if (a.width() < min_size || a.height() < min_size) {
        throw TooSmall(fmt::format("{} needs at least {}x{}, got {}x{}", what, min_size, min_size, a.width(),
                                   a.height()));
    }
}

std::array<double, kWindow> window_taps() {
    std::array<double, kWindow> taps{};
    double total = 0.0;
    for (int i = 0; i < kWindow; ++i) {
        const double d = i - kWindow / 2;
        taps[static_cast<std::size_t>(i)] = std::exp(-0.5 * d * d / (kSigma * kSigma));
        total += taps[static_cast<std::size_t>(i)];
    }
    for (double& t : taps) {
        t /= total;
    }
    return taps;
}

// Valid-region separable filtering: output (w-10) x (h-10).
std::vector<double> filter_valid(const std::vector<double>& src, int w, int h) {
    static const auto taps = window_taps();
    const int ow = w - kWindow + 1;
    const int oh = h - kWindow + 1;
    std::vector<double> tmp(static_cast<std::size_t>(ow) * h);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < ow; ++x) {
            double acc = 0.0;
            for (int k = 0; k < kWindow; ++k) {
                acc += taps[static_cast<std::size_t>(k)] * src[static_cast<std::size_t>(y) * w + x + k];
            }
            tmp[static_cast<std::size_t>(y) * ow + x] = acc;
        }
    }
    std::vector<double> out(static_cast<std::size_t>(ow) * oh);
    for (int y = 0; y < oh; ++y) {
        for (int x = 0; x < ow; ++x) {
            double acc = 0.0;
            for (int k = 0; k < kWindow; ++k) {
                acc += taps[static_cast<std::size_t>(k)] * tmp[static_cast<std::size_t>(y + k) * ow + x];
            }
            out[static_cast<std::size_t>(y) * ow + x] = acc;
        }
    }
    return out;
}

}  // namespace

double psnr(const ImageBuffer& ref, const ImageBuffer& test) {
    check_pair(ref, test, 1, "psnr");
    const auto a = ref.floats();
    const auto b = test.floats();
    double sse = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = static_cast<double>(a[i]) - b[i];
        sse += d * d;
    }
    const double mse = sse / static_cast<double>(a.size());
    if (mse == 0.0) {
        return kPsnrCap;
    }
    return std::min(kPsnrCap, 10.0 * std::log10(255.0 * 255.0 / mse));
}

SsimStats ssim_stats(const ImageBuffer& ref, const ImageBuffer& test) {
    check_pair(ref, test, kWindow, "ssim");
    const int w = ref.width();
    const int h = ref.height();
    const std::size_t n = static_cast<std::size_t>(w) * h;
    std::vector<double> x(n), y(n), xx(n), yy(n), xy(n);
    for (std::size_t i = 0; i < n; ++i) {
        x[i] = ref.floats()[i];
        y[i] = test.floats()[i];
        xx[i] = x[i] * x[i];
        yy[i] = y[i] * y[i];
        xy[i] = x[i] * y[i];
    }
    const auto mu_x = filter_valid(x, w, h);
    const auto mu_y = filter_valid(y, w, h);
    const auto e_xx = filter_valid(xx, w, h);
    const auto e_yy = filter_valid(yy, w, h);
    const auto e_xy = filter_valid(xy, w, h);

    double sum_ssim = 0.0;
    double sum_cs = 0.0;
    for (std::size_t i = 0; i < mu_x.size(); ++i) {
        const double mx = mu_x[i];
        const double my = mu_y[i];
        const double var_x = e_xx[i] - mx * mx;
        const double var_y = e_yy[i] - my * my;
        const double cov = e_xy[i] - mx * my;
        const double cs = (2.0 * cov + kC2) / (var_x + var_y + kC2);
        const double lum = (2.0 * mx * my + kC1) / (mx * mx + my * my + kC1);
        sum_cs += cs;
        sum_ssim += lum * cs;
    }
    const double count = static_cast<double>(mu_x.size());
    return {sum_ssim / count, sum_cs / count};
}

double ssim(const ImageBuffer& ref, const ImageBuffer& test) { return ssim_stats(ref, test).ssim; }

ImageBuffer downsample2(const ImageBuffer& luma) {
    const int w = luma.width() / 2;
    const int h = luma.height() / 2;
    std::vector<float> out(static_cast<std::size_t>(w) * h);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            const double s = static_cast<double>(luma.at(2 * x, 2 * y)) + luma.at(2 * x + 1, 2 * y) +
                             luma.at(2 * x, 2 * y + 1) + luma.at(2 * x + 1, 2 * y + 1);
            out[static_cast<std::size_t>(y) * w + x] = static_cast<float>(0.25 * s);
        }
    }
    return ImageBuffer::from_floats(w, h, std::move(out));
}

MsSsimResult ms_ssim_detailed(const ImageBuffer& ref, const ImageBuffer& test) {
    constexpr int kScales = static_cast<int>(kMsSsimWeights.size());
    check_pair(ref, test, kWindow << (kScales - 1), "ms_ssim");
    MsSsimResult result;
    ImageBuffer a = ref;
    ImageBuffer b = test;
    result.value = 1.0;
    for (int s = 0; s < kScales; ++s) {
        const auto stats = ssim_stats(a, b);
        const bool last = s == kScales - 1;
        const double component = last ? stats.ssim : stats.cs;
        result.components[static_cast<std::size_t>(s)] = component;
        result.value *= std::pow(std::max(component, 0.0), kMsSsimWeights[static_cast<std::size_t>(s)]);
        if (!last) {
            a = downsample2(a);
            b = downsample2(b);
        }
    }
    return result;
}

double ms_ssim(const ImageBuffer& ref, const ImageBuffer& test) { return ms_ssim_detailed(ref, test).value; }

std::vector<FrScore> full_reference_scores(const ImageBuffer& ref, const ImageBuffer& test,
                                           const std::string& stimulus_id, int max_misalignment) {
    if (std::abs(ref.width() - test.width()) > max_misalignment ||
        std::abs(ref.height() - test.height()) > max_misalignment) {
        throw DimensionMismatch(fmt::format("{}: reference {}x{} vs test {}x{}", stimulus_id, ref.width(),
                                            ref.height(), test.width(), test.height()));
    }
    const int w = std::min(ref.width(), test.width());
    const int h = std::min(ref.height(), test.height());
    const ImageBuffer a = to_luma(w == ref.width() && h == ref.height() ? ref : crop(ref, 0, 0, w, h));
    const ImageBuffer b = to_luma(w == test.width() && h == test.height() ? test : crop(test, 0, 0, w, h));

    std::vector<FrScore> out;
    out.push_back({stimulus_id, "psnr", psnr(a, b)});
    if (w >= kWindow && h >= kWindow) {
        out.push_back({stimulus_id, "ssim", ssim(a, b)});
    }
    if (w >= (kWindow << 4) && h >= (kWindow << 4)) {
        out.push_back({stimulus_id, "ms_ssim", ms_ssim(a, b)});
    }
    return out;
}

}  // namespace uab
