#pragma once

#include <array>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "uab/imaging.hpp"

namespace uab {

/// The ten signal features of one stimulus. A feature is empty when its
/// extraction failed; `diagnostics` then says why.
struct FeatureVector {
    std::string stimulus_id;
    std::optional<double> cpbd;
    std::optional<double> si;
    std::optional<double> fft;
    std::optional<double> noise;
    std::optional<double> blur;
    std::optional<double> blur_strength;
    std::optional<double> saturation;
    std::optional<double> colorfulness;
    std::optional<double> contrast;
    std::optional<double> tone;
    std::vector<std::string> diagnostics;

    static constexpr std::array<std::string_view, 10> kNames = {
        "cpbd", "si", "fft", "noise", "blur", "blur_strength", "saturation", "colorfulness", "contrast", "tone"};

    /// Values in kNames order.
    [[nodiscard]] std::array<std::optional<double>, 10> values() const;
    void set(std::size_t index, std::optional<double> value);
};

/// Spatial information: population std of the Sobel magnitude over interior
/// pixels. Needs at least 3x3 (TooSmall).
[[nodiscard]] double spatial_information(const ImageBuffer& luma);

/// Hasler-Suesstrunk colorfulness of an RGB8 image.
[[nodiscard]] double colorfulness(const ImageBuffer& rgb);

/// Widths of horizontally profiled edges. An edge pixel is a local maximum
/// of the squared horizontal Sobel response along its row exceeding four
/// times the mean response; its width is the distance between the intensity
/// extrema bracketing it.
struct EdgeMap {
    int width = 0;
    int height = 0;
    std::vector<float> edge_width;  // 0 where the pixel is not an edge
    std::size_t edge_count = 0;
};

[[nodiscard]] EdgeMap detect_edges(const ImageBuffer& luma);

struct CpbdResult {
    double value = 0.0;
    std::size_t edge_blocks = 0;
    std::size_t edge_pixels = 0;  // edge pixels inside edge blocks
    bool no_edges = false;
};

/// Cumulative probability of blur detection in [0,1]. 64x64 blocks with more
/// than 0.2% edge pixels take part; just-noticeable width 5 for block
/// contrast <= 50, else 3; beta 3.6; an edge counts as sharp when its blur
/// probability is <= 0.63. No edge blocks yields 0 with `no_edges` set.
[[nodiscard]] CpbdResult cpbd_detailed(const ImageBuffer& luma);
[[nodiscard]] double cpbd(const ImageBuffer& luma);

/// Crete re-blur metric in [0,1], higher is blurrier. Needs 9x9 (TooSmall).
/// Constant images give 0.
[[nodiscard]] double blur(const ImageBuffer& luma);

/// Mean edge width in pixels over all detected edges, 0 without edges.
/// Needs 3x3 (TooSmall).
[[nodiscard]] double blur_strength(const ImageBuffer& luma);

/// High-band share of the log-magnitude spectrum of the mean-removed luma:
/// mean log(1+|F|) over normalized radius > 0.5 divided by the mean over all
/// frequencies. Needs 32x32 (TooSmall); constant images give 0.
[[nodiscard]] double fft_feature(const ImageBuffer& luma);

/// Robust sigma (1.4826 * MAD) of the residual after Gaussian smoothing with
/// sigma 1.5. Needs 9x9 (TooSmall).
[[nodiscard]] double noise(const ImageBuffer& luma);

/// Separable Gaussian blur with radius ceil(3 sigma) and clamped borders.
[[nodiscard]] ImageBuffer gaussian_blur(const ImageBuffer& luma, double sigma);

struct BasicStats {
    double contrast = 0.0;    // population std of luma / 255
    double saturation = 0.0;  // mean HSV saturation
    double tone = 0.0;        // mean luma / 255
};

[[nodiscard]] BasicStats basic_stats(const ImageBuffer& rgb);

/// All ten features. Never throws for per-feature failures; those fields are
/// left empty with a diagnostic.
[[nodiscard]] FeatureVector extract_features(const ImageBuffer& img, std::string stimulus_id = {});

/// Header stimulus_id followed by the feature names; missing values are
/// empty fields.
[[nodiscard]] std::string features_to_csv(std::span<const FeatureVector> rows);
/// Columns are located by name and extra columns ignored. ParseError for a
/// missing feature column or a non-numeric value.
[[nodiscard]] std::vector<FeatureVector> features_from_csv(std::string_view csv_text);
[[nodiscard]] std::vector<FeatureVector> read_features(const std::filesystem::path& path);

}  // namespace uab
