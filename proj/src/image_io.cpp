#include "styleproj/image_io.hpp"

#include <png.h>

#include <cstdio>
// jpeglib.h expects size_t and FILE to be declared first.
#include <jpeglib.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <csetjmp>
#include <fstream>
#include <memory>
#include <random>

namespace styleproj {

namespace fs = std::filesystem;

RasterImage::RasterImage(std::size_t w, std::size_t h) : RasterImage(w, h, std::vector<std::uint8_t>(w * h * 3, 0)) {}

RasterImage::RasterImage(std::size_t w, std::size_t h, std::vector<std::uint8_t> rgb)
    : width(w), height(h), pixels(std::move(rgb)) {
    if (w == 0 || h == 0) throw std::invalid_argument("image dimensions must be positive");
    if (pixels.size() != w * h * 3) {
        throw std::invalid_argument("pixel buffer length " + std::to_string(pixels.size()) +
                                    " does not match " + std::to_string(w) + "x" +
                                    std::to_string(h) + " RGB");
    }
}

namespace {

[[noreturn]] void fail(const fs::path& path, const std::string& reason) {
    throw IoError(path.string() + ": " + reason);
}

std::vector<std::uint8_t> read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(path, "cannot open file");
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

RasterImage decode_png(const std::vector<std::uint8_t>& bytes, const fs::path& path) {
    png_image image{};
    image.version = PNG_IMAGE_VERSION;
    if (!png_image_begin_read_from_memory(&image, bytes.data(), bytes.size())) {
        fail(path, std::string("PNG decode failed: ") + image.message);
    }
    image.format = PNG_FORMAT_RGBA;
    std::vector<std::uint8_t> rgba(PNG_IMAGE_SIZE(image));
    if (!png_image_finish_read(&image, nullptr, rgba.data(), 0, nullptr)) {
        const std::string message = image.message;
        png_image_free(&image);
        fail(path, "PNG decode failed: " + message);
    }
    RasterImage out(image.width, image.height);
    const std::size_t count = out.width * out.height;
    for (std::size_t i = 0; i < count; ++i) {
        const unsigned alpha = rgba[4 * i + 3];
        for (std::size_t c = 0; c < 3; ++c) {
            const unsigned value = rgba[4 * i + c];
            // Composite over white, rounded to nearest.
            out.pixels[3 * i + c] =
                static_cast<std::uint8_t>((value * alpha + 255u * (255u - alpha) + 127u) / 255u);
        }
    }
    return out;
}

struct JpegErrorManager {
    jpeg_error_mgr base;
    std::jmp_buf jump;
    char message[JMSG_LENGTH_MAX];
};

void jpeg_error_exit(j_common_ptr info) {
    auto* manager = reinterpret_cast<JpegErrorManager*>(info->err);
    (*info->err->format_message)(info, manager->message);
    std::longjmp(manager->jump, 1);
}

// Kept free of C++ objects with non-trivial destructors between setjmp and
// longjmp.
bool decode_jpeg_raw(const std::vector<std::uint8_t>& bytes, std::uint8_t* out, std::size_t capacity,
                     std::size_t& width, std::size_t& height, char* message) {
    jpeg_decompress_struct info;
    JpegErrorManager errors;
    info.err = jpeg_std_error(&errors.base);
    errors.base.error_exit = jpeg_error_exit;
    if (setjmp(errors.jump)) {
        std::snprintf(message, JMSG_LENGTH_MAX, "%s", errors.message);
        jpeg_destroy_decompress(&info);
        return false;
    }
    jpeg_create_decompress(&info);
    jpeg_mem_src(&info, bytes.data(), static_cast<unsigned long>(bytes.size()));
    jpeg_read_header(&info, TRUE);
    info.out_color_space = JCS_RGB;
    jpeg_calc_output_dimensions(&info);
    width = info.output_width;
    height = info.output_height;
    if (out == nullptr || width * height * 3 > capacity) {
        jpeg_destroy_decompress(&info);
        return true;
    }
    jpeg_start_decompress(&info);
    while (info.output_scanline < info.output_height) {
        JSAMPROW row = out + static_cast<std::size_t>(info.output_scanline) * width * 3;
        jpeg_read_scanlines(&info, &row, 1);
    }
    jpeg_finish_decompress(&info);
    jpeg_destroy_decompress(&info);
    return true;
}

RasterImage decode_jpeg(const std::vector<std::uint8_t>& bytes, const fs::path& path) {
    std::size_t width = 0;
    std::size_t height = 0;
    char message[JMSG_LENGTH_MAX] = {};
    // First pass reads the header only to size the buffer.
    if (!decode_jpeg_raw(bytes, nullptr, 0, width, height, message)) {
        fail(path, std::string("JPEG decode failed: ") + message);
    }
    if (width == 0 || height == 0) fail(path, "JPEG has zero size");
    std::vector<std::uint8_t> rgb(width * height * 3);
    if (!decode_jpeg_raw(bytes, rgb.data(), rgb.size(), width, height, message)) {
        fail(path, std::string("JPEG decode failed: ") + message);
    }
    return {width, height, std::move(rgb)};
}

std::uint8_t quantize(double v) {
    const double clamped = std::clamp(v, 0.0, 1.0);
    return static_cast<std::uint8_t>(std::round(clamped * 255.0));
}

} // namespace

RasterImage load_image(const fs::path& path) {
    const auto bytes = read_file(path);
    static constexpr std::array<std::uint8_t, 8> kPngMagic = {0x89, 'P', 'N', 'G', '\r', '\n', 0x1A, '\n'};
    if (bytes.size() >= kPngMagic.size() && std::equal(kPngMagic.begin(), kPngMagic.end(), bytes.begin())) {
        return decode_png(bytes, path);
    }
    if (bytes.size() >= 3 && bytes[0] == 0xFF && bytes[1] == 0xD8 && bytes[2] == 0xFF) {
        return decode_jpeg(bytes, path);
    }
    fail(path, "unsupported image format (expected PNG or JPEG)");
}

void save_png(const RasterImage& image, const fs::path& path) {
    png_image info{};
    info.version = PNG_IMAGE_VERSION;
    info.width = static_cast<png_uint_32>(image.width);
    info.height = static_cast<png_uint_32>(image.height);
    info.format = PNG_FORMAT_RGB;

    fs::path temp = path;
    temp += ".tmp";
    if (!png_image_write_to_file(&info, temp.c_str(), 0, image.pixels.data(), 0, nullptr)) {
        const std::string message = info.message;
        std::error_code ignored;
        fs::remove(temp, ignored);
        fail(path, "PNG encode failed: " + message);
    }
    std::error_code ec;
    fs::rename(temp, path, ec);
    if (ec) {
        fs::remove(temp, ec);
        fail(path, "cannot move output into place: " + ec.message());
    }
}

FeatureMap to_feature_map(const RasterImage& image) {
    const std::size_t count = image.width * image.height;
    std::vector<double> data(3 * count);
    for (std::size_t i = 0; i < count; ++i)
        for (std::size_t c = 0; c < 3; ++c) data[c * count + i] = image.pixels[3 * i + c] / 255.0;
    return {3, image.height, image.width, std::move(data)};
}

RasterImage from_feature_map(const FeatureMap& m) {
    if (m.channels() != 3) {
        throw ShapeError("from_feature_map: expected 3 channels, got " + m.shape_string());
    }
    RasterImage out(m.width(), m.height());
    const std::size_t count = m.spatial();
    const auto data = m.data();
    for (std::size_t i = 0; i < count; ++i)
        for (std::size_t c = 0; c < 3; ++c) out.pixels[3 * i + c] = quantize(data[c * count + i]);
    return out;
}

RasterImage resize_bilinear(const RasterImage& image, std::size_t width, std::size_t height) {
    if (width == 0 || height == 0) throw std::invalid_argument("resize target must be positive");
    if (width == image.width && height == image.height) return image;

    const auto source_coord = [](std::size_t dst, std::size_t src_size, std::size_t dst_size) {
        const double scale = static_cast<double>(src_size) / static_cast<double>(dst_size);
        const double s = (static_cast<double>(dst) + 0.5) * scale - 0.5;
        return std::clamp(s, 0.0, static_cast<double>(src_size - 1));
    };

    RasterImage out(width, height);
    for (std::size_t y = 0; y < height; ++y) {
        const double sy = source_coord(y, image.height, height);
        const auto y0 = static_cast<std::size_t>(sy);
        const std::size_t y1 = std::min(y0 + 1, image.height - 1);
        const double fy = sy - static_cast<double>(y0);
        for (std::size_t x = 0; x < width; ++x) {
            const double sx = source_coord(x, image.width, width);
            const auto x0 = static_cast<std::size_t>(sx);
            const std::size_t x1 = std::min(x0 + 1, image.width - 1);
            const double fx = sx - static_cast<double>(x0);
            for (std::size_t c = 0; c < 3; ++c) {
                const double top = image.at(x0, y0, c) * (1.0 - fx) + image.at(x1, y0, c) * fx;
                const double bottom = image.at(x0, y1, c) * (1.0 - fx) + image.at(x1, y1, c) * fx;
                const double v = top * (1.0 - fy) + bottom * fy;
                out.at(x, y, c) = static_cast<std::uint8_t>(std::clamp(std::round(v), 0.0, 255.0));
            }
        }
    }
    return out;
}

RasterImage crop(const RasterImage& image, std::size_t x0, std::size_t y0, std::size_t width,
                 std::size_t height) {
    if (width == 0 || height == 0 || x0 + width > image.width || y0 + height > image.height) {
        throw std::invalid_argument("crop " + std::to_string(width) + "x" + std::to_string(height) +
                                    "+" + std::to_string(x0) + "+" + std::to_string(y0) +
                                    " outside " + std::to_string(image.width) + "x" +
                                    std::to_string(image.height) + " image");
    }
    RasterImage out(width, height);
    for (std::size_t y = 0; y < height; ++y) {
        const auto* src = image.pixels.data() + ((y0 + y) * image.width + x0) * 3;
        std::copy(src, src + width * 3, out.pixels.data() + y * width * 3);
    }
    return out;
}

RasterImage center_crop(const RasterImage& image, std::size_t width, std::size_t height) {
    if (width > image.width || height > image.height) {
        throw std::invalid_argument("crop larger than image");
    }
    return crop(image, (image.width - width) / 2, (image.height - height) / 2, width, height);
}

RasterImage random_crop(const RasterImage& image, std::size_t width, std::size_t height,
                        std::uint64_t seed) {
    if (width == 0 || height == 0 || width > image.width || height > image.height) {
        throw std::invalid_argument("crop larger than image");
    }
    std::mt19937_64 engine(seed);
    const std::size_t x0 = engine() % (image.width - width + 1);
    const std::size_t y0 = engine() % (image.height - height + 1);
    return crop(image, x0, y0, width, height);
}

} // namespace styleproj
