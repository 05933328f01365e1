#include <csetjmp>
#include <cstdio>
#include <fstream>
#include <iterator>
#include <string>

#include <fmt/format.h>
#include <jpeglib.h>
#include <png.h>

#include "uab/error.hpp"
#include "uab/imaging.hpp"

namespace uab {

namespace {

bool is_png(std::span<const std::uint8_t> d) {
    static constexpr std::uint8_t kSig[8] = {0x89, 'P', 'N', 'G', 0x0D, 0x0A, 0x1A, 0x0A};
    return d.size() >= 8 && std::equal(std::begin(kSig), std::end(kSig), d.begin());
}

bool is_jpeg(std::span<const std::uint8_t> d) {
    return d.size() >= 3 && d[0] == 0xFF && d[1] == 0xD8 && d[2] == 0xFF;
}

ImageBuffer decode_png(std::span<const std::uint8_t> data) {
    png_image image{};
    image.version = PNG_IMAGE_VERSION;
    if (png_image_begin_read_from_memory(&image, data.data(), data.size()) == 0) {
        throw FormatError(fmt::format("png: {}", image.message));
    }
    image.format = PNG_FORMAT_RGB;
    std::vector<std::uint8_t> px(PNG_IMAGE_SIZE(image));
    if (png_image_finish_read(&image, nullptr, px.data(), 0, nullptr) == 0) {
        const std::string msg = image.message;
        png_image_free(&image);
        throw FormatError(fmt::format("png: {}", msg));
    }
    return ImageBuffer::from_bytes(static_cast<int>(image.width), static_cast<int>(image.height),
                                   PixelFormat::RGB8, std::move(px));
}

struct JpegErrorManager {
    jpeg_error_mgr pub;
    std::jmp_buf jump;
    char message[JMSG_LENGTH_MAX];
};

void jpeg_error_exit(j_common_ptr cinfo) {
    auto* err = reinterpret_cast<JpegErrorManager*>(cinfo->err);
    (*cinfo->err->format_message)(cinfo, err->message);
    std::longjmp(err->jump, 1);
}

// Corrupt-data warnings (e.g. premature end of data) are fatal here; libjpeg
// would otherwise pad the missing scanlines with gray.
void jpeg_emit_message(j_common_ptr cinfo, int level) {
    if (level < 0) {
        jpeg_error_exit(cinfo);
    }
}

ImageBuffer decode_jpeg(std::span<const std::uint8_t> data) {
    jpeg_decompress_struct cinfo{};
    JpegErrorManager err{};
    cinfo.err = jpeg_std_error(&err.pub);
    err.pub.error_exit = jpeg_error_exit;
    err.pub.emit_message = jpeg_emit_message;

    // Everything touched after setjmp lives outside this frame's registers.
    std::vector<std::uint8_t> px;
    if (setjmp(err.jump) != 0) {
        jpeg_destroy_decompress(&cinfo);
        throw FormatError(fmt::format("jpeg: {}", err.message));
    }
    jpeg_create_decompress(&cinfo);
    jpeg_mem_src(&cinfo, data.data(), static_cast<unsigned long>(data.size()));
    jpeg_read_header(&cinfo, TRUE);
    cinfo.out_color_space = JCS_RGB;
    cinfo.dct_method = JDCT_ISLOW;
    jpeg_start_decompress(&cinfo);
    const auto w = static_cast<std::size_t>(cinfo.output_width);
    const auto h = static_cast<std::size_t>(cinfo.output_height);
    px.resize(w * h * 3);
    while (cinfo.output_scanline < cinfo.output_height) {
        JSAMPROW row = px.data() + static_cast<std::size_t>(cinfo.output_scanline) * w * 3;
        jpeg_read_scanlines(&cinfo, &row, 1);
    }
    jpeg_finish_decompress(&cinfo);
    jpeg_destroy_decompress(&cinfo);
    return ImageBuffer::from_bytes(static_cast<int>(w), static_cast<int>(h), PixelFormat::RGB8,
                                   std::move(px));
}

}  // namespace

ImageBuffer decode_memory(std::span<const std::uint8_t> data) {
    if (is_png(data)) {
        return decode_png(data);
    }
    if (is_jpeg(data)) {
        return decode_jpeg(data);
    }
    throw FormatError("unsupported image format (expected PNG or JPEG)");
}

ImageBuffer decode(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw IoError(fmt::format("cannot open {}", path.string()));
    }
    std::vector<std::uint8_t> data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    if (in.bad()) {
        throw IoError(fmt::format("read failed for {}", path.string()));
    }
    try {
        return decode_memory(data);
    } catch (const FormatError& e) {
        throw FormatError(fmt::format("{}: {}", path.string(), e.what()));
    }
}

namespace {

void append_bytes(png_structp png, png_bytep data, png_size_t length) {
    auto* out = static_cast<std::vector<std::uint8_t>*>(png_get_io_ptr(png));
    out->insert(out->end(), data, data + length);
}

void flush_nothing(png_structp) {}

// Single compression pass; the simplified write API compresses twice when
// the output size is unknown. No C++ object is constructed between setjmp
// and the end of the protected region.
void write_png(const ImageBuffer& img, std::vector<std::uint8_t>& out, std::vector<png_bytep>& rows) {
    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (png == nullptr) {
        throw FormatError("png encode: out of memory");
    }
    png_infop info = png_create_info_struct(png);
    if (info == nullptr || setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        throw FormatError("png encode failed");
    }
    png_set_write_fn(png, &out, append_bytes, flush_nothing);
    png_set_IHDR(png, info, static_cast<png_uint_32>(img.width()), static_cast<png_uint_32>(img.height()), 8,
                 img.format() == PixelFormat::RGB8 ? PNG_COLOR_TYPE_RGB : PNG_COLOR_TYPE_GRAY, PNG_INTERLACE_NONE,
                 PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_set_compression_level(png, 3);
    png_write_info(png, info);
    png_write_image(png, rows.data());
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
}

}  // namespace

std::vector<std::uint8_t> encode_png_memory(const ImageBuffer& img) {
    if (img.format() == PixelFormat::GRAYF) {
        throw FormatError("encode_png needs an 8-bit image");
    }
    if (img.empty()) {
        throw InvalidDimension("cannot encode an empty image");
    }
    const std::size_t stride = static_cast<std::size_t>(img.width()) * img.channels();
    auto* base = const_cast<std::uint8_t*>(img.bytes().data());
    std::vector<png_bytep> rows(static_cast<std::size_t>(img.height()));
    for (std::size_t y = 0; y < rows.size(); ++y) {
        rows[y] = base + y * stride;
    }
    std::vector<std::uint8_t> out;
    out.reserve(stride * rows.size() / 2);
    write_png(img, out, rows);
    return out;
}

void encode_png(const ImageBuffer& img, const std::filesystem::path& path) {
    const auto data = encode_png_memory(img);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw IoError(fmt::format("cannot write {}", path.string()));
    }
    out.write(reinterpret_cast<const char*>(data.data()), static_cast<std::streamsize>(data.size()));
    if (!out) {
        throw IoError(fmt::format("write failed for {}", path.string()));
    }
}

}  // namespace uab
