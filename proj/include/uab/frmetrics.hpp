#pragma once

#include <array>
#include <string>
#include <vector>

#include "uab/imaging.hpp"

namespace uab {

/// One full-reference score row; `metric` is psnr, ssim or ms_ssim.
struct FrScore {
    std::string stimulus_id;
    std::string metric;
    double value = 0.0;
};

inline constexpr double kPsnrCap = 100.0;

// All metrics take GRAYF luma and throw DimensionMismatch on unequal sizes.

/// 10*log10(255^2 / MSE), capped at 100 dB (identical images).
[[nodiscard]] double psnr(const ImageBuffer& ref, const ImageBuffer& test);

struct SsimStats {
    double ssim = 0.0;  // mean of the SSIM map
    double cs = 0.0;    // mean of the contrast-structure map
};

/// Single-scale SSIM: 11x11 Gaussian window (sigma 1.5), K1 0.01, K2 0.03,
/// L 255, valid-region map. Needs 11x11 (TooSmall).
[[nodiscard]] SsimStats ssim_stats(const ImageBuffer& ref, const ImageBuffer& test);
[[nodiscard]] double ssim(const ImageBuffer& ref, const ImageBuffer& test);

inline constexpr std::array<double, 5> kMsSsimWeights = {0.0448, 0.2856, 0.3001, 0.2363, 0.1333};

struct MsSsimResult {
    double value = 0.0;
    /// cs at scales 1..4, full SSIM at scale 5; the factors of the product.
    std::array<double, 5> components{};
};

/// Five dyadic scales, 2x2 box low-pass before each subsampling. Negative
/// components are clamped to 0 before the weighted product. Needs 176x176.
[[nodiscard]] MsSsimResult ms_ssim_detailed(const ImageBuffer& ref, const ImageBuffer& test);
[[nodiscard]] double ms_ssim(const ImageBuffer& ref, const ImageBuffer& test);

/// 2x2 box average, output floor(w/2) x floor(h/2).
[[nodiscard]] ImageBuffer downsample2(const ImageBuffer& luma);

/// psnr, ssim and ms_ssim of `test` against `ref` (both any format; luma is
/// taken). Sizes differing by at most `max_misalignment` pixels per axis are
/// compared on their common top-left region; larger gaps throw
/// DimensionMismatch. Metrics whose size precondition fails are omitted.
[[nodiscard]] std::vector<FrScore> full_reference_scores(const ImageBuffer& ref, const ImageBuffer& test,
                                                         const std::string& stimulus_id,
                                                         int max_misalignment = 4);

}  // namespace uab
