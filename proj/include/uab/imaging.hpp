#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

namespace uab {

enum class PixelFormat {
    RGB8,   // interleaved R,G,B bytes
    GRAY8,  // one byte per pixel
    GRAYF,  // one float per pixel, nominally in [0,255]
};

[[nodiscard]] constexpr int channel_count(PixelFormat f) noexcept {
    return f == PixelFormat::RGB8 ? 3 : 1;
}

/// Row-major raster. 8-bit formats keep their samples in `bytes()`, GRAYF in
/// `floats()`; the other vector stays empty.
class ImageBuffer {
public:
    ImageBuffer() = default;
    /// Zero-filled image. Throws InvalidDimension for a zero extent.
    ImageBuffer(int width, int height, PixelFormat format);

    static ImageBuffer from_bytes(int width, int height, PixelFormat format,
                                  std::vector<std::uint8_t> samples);
    static ImageBuffer from_floats(int width, int height, std::vector<float> samples);

    [[nodiscard]] int width() const noexcept { return width_; }
    [[nodiscard]] int height() const noexcept { return height_; }
    [[nodiscard]] PixelFormat format() const noexcept { return format_; }
    [[nodiscard]] int channels() const noexcept { return channel_count(format_); }
    [[nodiscard]] bool empty() const noexcept { return width_ == 0 || height_ == 0; }
    [[nodiscard]] std::size_t sample_count() const noexcept {
        return static_cast<std::size_t>(width_) * height_ * channels();
    }

    [[nodiscard]] std::span<const std::uint8_t> bytes() const noexcept { return bytes_; }
    [[nodiscard]] std::span<std::uint8_t> bytes() noexcept { return bytes_; }
    [[nodiscard]] std::span<const float> floats() const noexcept { return floats_; }
    [[nodiscard]] std::span<float> floats() noexcept { return floats_; }

    /// Sample at (x, y, c) as float regardless of format.
    [[nodiscard]] float at(int x, int y, int c = 0) const noexcept {
        const std::size_t i = (static_cast<std::size_t>(y) * width_ + x) * channels() + c;
        return format_ == PixelFormat::GRAYF ? floats_[i] : static_cast<float>(bytes_[i]);
    }

    friend bool operator==(const ImageBuffer&, const ImageBuffer&) = default;

private:
    int width_ = 0;
    int height_ = 0;
    PixelFormat format_ = PixelFormat::RGB8;
    std::vector<std::uint8_t> bytes_;
    std::vector<float> floats_;
};

struct PatchGrid {
    int patch_size = 0;
    int cols = 0;
    int rows = 0;
    std::vector<ImageBuffer> patches;  // row-major
    /// Set when the image is smaller than one patch in either direction.
    bool empty_grid = false;
};

// Codec. Decoding yields RGB8 for both PNG and JPEG input.
[[nodiscard]] ImageBuffer decode(const std::filesystem::path& path);
[[nodiscard]] ImageBuffer decode_memory(std::span<const std::uint8_t> data);
void encode_png(const ImageBuffer& img, const std::filesystem::path& path);
[[nodiscard]] std::vector<std::uint8_t> encode_png_memory(const ImageBuffer& img);

/// Rec.601 luma, unrounded.
[[nodiscard]] ImageBuffer to_luma(const ImageBuffer& img);

/// Lanczos-3 kernel sinc(x)*sinc(x/3), zero outside |x| < 3.
[[nodiscard]] double lanczos3(double x) noexcept;

/// Separable Lanczos-3 resampling with center-aligned sampling, clamped
/// edges and anti-aliasing (kernel stretched by the scale) when shrinking.
/// 8-bit outputs are clamped to [0,255] and rounded half away from zero.
[[nodiscard]] ImageBuffer resize_lanczos(const ImageBuffer& img, int out_width, int out_height);

/// Width follows round(width * target_height / height), at least 1.
[[nodiscard]] ImageBuffer rescale_to_height(const ImageBuffer& img, int target_height);
[[nodiscard]] int scaled_width(int width, int height, int target_height);

[[nodiscard]] PatchGrid extract_patches(const ImageBuffer& img, int patch_size);
[[nodiscard]] ImageBuffer crop(const ImageBuffer& img, int x0, int y0, int w, int h);
[[nodiscard]] ImageBuffer center_crop(const ImageBuffer& img, int w, int h);

}  // namespace uab
