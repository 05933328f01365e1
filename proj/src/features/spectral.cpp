#include <algorithm>
#include <cmath>
#include <complex>
#include <memory>
#include <mutex>

#include <fftw3.h>
#include <fmt/format.h>

#include "uab/error.hpp"
#include "uab/features.hpp"

namespace uab {

namespace {

constexpr double kHighBandRadius = 0.5;

// The FFTW planner is not re-entrant; plan creation and destruction are
// serialized, execution is not.
std::mutex& planner_mutex() {
    static std::mutex m;
    return m;
}

struct FftwDeleter {
    void operator()(fftw_complex* p) const noexcept { fftw_free(p); }
};

using FftwBuffer = std::unique_ptr<fftw_complex[], FftwDeleter>;

FftwBuffer make_buffer(std::size_t n) {
    auto* p = static_cast<fftw_complex*>(fftw_malloc(sizeof(fftw_complex) * n));
    if (p == nullptr) {
        throw std::bad_alloc();
    }
    return FftwBuffer(p);
}

// Signed frequency index normalized so the Nyquist frequency maps to 1.
double normalized_frequency(int k, int n) {
    const int signed_k = k <= n / 2 ? k : k - n;
    return static_cast<double>(signed_k) / (n / 2.0);
}

}  // namespace

double fft_feature(const ImageBuffer& luma) {
    if (luma.format() != PixelFormat::GRAYF) {
        throw FormatError("fft feature expects a GRAYF luma image");
    }
    const int w = luma.width();
    const int h = luma.height();
    if (w < 32 || h < 32) {
        throw TooSmall(fmt::format("fft feature needs at least 32x32, got {}x{}", w, h));
    }
    const std::size_t n = static_cast<std::size_t>(w) * h;
    const auto px = luma.floats();
    const auto [lo, hi] = std::minmax_element(px.begin(), px.end());
    if (*lo == *hi) {
        return 0.0;
    }
    double mean = 0.0;
    for (float v : px) {
        mean += v;
    }
    mean /= static_cast<double>(n);

    auto in = make_buffer(n);
    auto out = make_buffer(n);
    for (std::size_t i = 0; i < n; ++i) {
        in[i][0] = px[i] - mean;
        in[i][1] = 0.0;
    }
    fftw_plan plan = nullptr;
    {
        std::lock_guard lock(planner_mutex());
        plan = fftw_plan_dft_2d(h, w, in.get(), out.get(), FFTW_FORWARD, FFTW_ESTIMATE);
    }
    fftw_execute(plan);
    {
        std::lock_guard lock(planner_mutex());
        fftw_destroy_plan(plan);
    }

    double total = 0.0;
    double high = 0.0;
    std::size_t high_count = 0;
    for (int v = 0; v < h; ++v) {
        const double fv = normalized_frequency(v, h);
        for (int u = 0; u < w; ++u) {
            const double fu = normalized_frequency(u, w);
            const std::size_t i = static_cast<std::size_t>(v) * w + u;
            const double mag = std::log1p(std::hypot(out[i][0], out[i][1]));
            total += mag;
            if (std::hypot(fu, fv) > kHighBandRadius) {
                high += mag;
                ++high_count;
            }
        }
    }
    if (total == 0.0 || high_count == 0) {
        return 0.0;
    }
    return (high / static_cast<double>(high_count)) / (total / static_cast<double>(n));
}

}  // namespace uab
