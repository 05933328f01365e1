#include "uab/imaging.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include <fmt/format.h>

#include "uab/error.hpp"

namespace uab {

namespace {

void check_extent(int width, int height) {
    if (width < 1 || height < 1) {
        throw InvalidDimension(fmt::format("image extent must be positive, got {}x{}", width, height));
    }
}

}  // namespace

ImageBuffer::ImageBuffer(int width, int height, PixelFormat format)
    : width_(width), height_(height), format_(format) {
    check_extent(width, height);
    if (format == PixelFormat::GRAYF) {
        floats_.assign(sample_count(), 0.0f);
    } else {
        bytes_.assign(sample_count(), 0);
    }
}

ImageBuffer ImageBuffer::from_bytes(int width, int height, PixelFormat format,
                                    std::vector<std::uint8_t> samples) {
    if (format == PixelFormat::GRAYF) {
        throw FormatError("from_bytes needs an 8-bit format");
    }
    check_extent(width, height);
    ImageBuffer img;
    img.width_ = width;
    img.height_ = height;
    img.format_ = format;
    if (samples.size() != img.sample_count()) {
        throw ShapeError(fmt::format("expected {} samples, got {}", img.sample_count(), samples.size()));
    }
    img.bytes_ = std::move(samples);
    return img;
}

ImageBuffer ImageBuffer::from_floats(int width, int height, std::vector<float> samples) {
    check_extent(width, height);
    ImageBuffer img;
    img.width_ = width;
    img.height_ = height;
    img.format_ = PixelFormat::GRAYF;
    if (samples.size() != img.sample_count()) {
        throw ShapeError(fmt::format("expected {} samples, got {}", img.sample_count(), samples.size()));
    }
    img.floats_ = std::move(samples);
    return img;
}

ImageBuffer to_luma(const ImageBuffer& img) {
    const std::size_t n = static_cast<std::size_t>(img.width()) * img.height();
    std::vector<float> luma(n);
    switch (img.format()) {
        case PixelFormat::RGB8: {
            const auto px = img.bytes();
            for (std::size_t i = 0; i < n; ++i) {
                luma[i] = static_cast<float>(0.299 * px[3 * i] + 0.587 * px[3 * i + 1] +
                                             0.114 * px[3 * i + 2]);
            }
            break;
        }
        case PixelFormat::GRAY8:
            std::copy(img.bytes().begin(), img.bytes().end(), luma.begin());
            break;
        case PixelFormat::GRAYF:
            return img;
    }
    return ImageBuffer::from_floats(img.width(), img.height(), std::move(luma));
}

int scaled_width(int width, int height, int target_height) {
    const double w = std::round(static_cast<double>(width) * target_height / height);
    return std::max(1, static_cast<int>(w));
}

ImageBuffer rescale_to_height(const ImageBuffer& img, int target_height) {
    if (target_height < 1) {
        throw InvalidDimension(fmt::format("target height must be positive, got {}", target_height));
    }
    return resize_lanczos(img, scaled_width(img.width(), img.height(), target_height), target_height);
}

ImageBuffer crop(const ImageBuffer& img, int x0, int y0, int w, int h) {
    if (w < 1 || h < 1 || x0 < 0 || y0 < 0 || x0 + w > img.width() || y0 + h > img.height()) {
        throw CropTooLarge(fmt::format("crop {}x{}+{}+{} exceeds {}x{} image", w, h, x0, y0,
                                       img.width(), img.height()));
    }
    const int ch = img.channels();
    const std::size_t row_len = static_cast<std::size_t>(w) * ch;
    ImageBuffer out(w, h, img.format());
    for (int y = 0; y < h; ++y) {
        const std::size_t src = (static_cast<std::size_t>(y0 + y) * img.width() + x0) * ch;
        const std::size_t dst = static_cast<std::size_t>(y) * row_len;
        if (img.format() == PixelFormat::GRAYF) {
            std::copy_n(img.floats().begin() + src, row_len, out.floats().begin() + dst);
        } else {
            std::copy_n(img.bytes().begin() + src, row_len, out.bytes().begin() + dst);
        }
    }
    return out;
}

ImageBuffer center_crop(const ImageBuffer& img, int w, int h) {
    if (w > img.width() || h > img.height()) {
        throw CropTooLarge(fmt::format("center crop {}x{} larger than {}x{} image", w, h,
                                       img.width(), img.height()));
    }
    return crop(img, (img.width() - w) / 2, (img.height() - h) / 2, w, h);
}

PatchGrid extract_patches(const ImageBuffer& img, int patch_size) {
    if (patch_size < 1) {
        throw InvalidDimension(fmt::format("patch size must be positive, got {}", patch_size));
    }
    PatchGrid grid;
    grid.patch_size = patch_size;
    grid.cols = img.width() / patch_size;
    grid.rows = img.height() / patch_size;
    grid.empty_grid = grid.cols == 0 || grid.rows == 0;
    if (grid.empty_grid) {
        grid.cols = grid.rows = 0;
        return grid;
    }
    grid.patches.reserve(static_cast<std::size_t>(grid.cols) * grid.rows);
    for (int r = 0; r < grid.rows; ++r) {
        for (int c = 0; c < grid.cols; ++c) {
            grid.patches.push_back(crop(img, c * patch_size, r * patch_size, patch_size, patch_size));
        }
    }
    return grid;
}

}  // namespace uab
