#pragma once

#include "styleproj/feature_map.hpp"

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <vector>

namespace styleproj {

class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// 8-bit RGB, interleaved, row-major.
struct RasterImage {
    std::size_t width = 0;
    std::size_t height = 0;
    std::vector<std::uint8_t> pixels;

    RasterImage() = default;
    RasterImage(std::size_t w, std::size_t h);
    RasterImage(std::size_t w, std::size_t h, std::vector<std::uint8_t> rgb);

    std::uint8_t& at(std::size_t x, std::size_t y, std::size_t c) {
        return pixels[(y * width + x) * 3 + c];
    }
    std::uint8_t at(std::size_t x, std::size_t y, std::size_t c) const {
        return pixels[(y * width + x) * 3 + c];
    }

    friend bool operator==(const RasterImage&, const RasterImage&) = default;
};

/// Decodes a PNG or JPEG (detected from the file signature). Alpha is
/// composited over white, grayscale replicated to RGB. Throws IoError.
RasterImage load_image(const std::filesystem::path& path);

/// Writes a PNG via a temporary file renamed into place. Throws IoError.
void save_png(const RasterImage& image, const std::filesystem::path& path);

/// Planar 3-channel map with values byte / 255.
FeatureMap to_feature_map(const RasterImage& image);

/// Inverse of to_feature_map: clamps to [0, 1], scales by 255 and rounds half
/// away from zero. Requires exactly 3 channels.
RasterImage from_feature_map(const FeatureMap& m);

/// Bilinear resampling with half-pixel centers (align_corners = false).
RasterImage resize_bilinear(const RasterImage& image, std::size_t width, std::size_t height);

RasterImage center_crop(const RasterImage& image, std::size_t width, std::size_t height);

/// Crop at an offset drawn uniformly from the valid range with `seed`.
RasterImage random_crop(const RasterImage& image, std::size_t width, std::size_t height,
                        std::uint64_t seed);

RasterImage crop(const RasterImage& image, std::size_t x0, std::size_t y0, std::size_t width,
                 std::size_t height);

} // namespace styleproj
