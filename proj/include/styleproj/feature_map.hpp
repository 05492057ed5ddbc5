#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace styleproj {

/// Raised when two operands disagree on channel count or spatial extent.
class ShapeError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Raised for numerically invalid input (non-finite values, failed decompositions).
class NumericError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/**
 * Dense C x H x W tensor of doubles.
 *
 * Storage is channel-major, then row-major within a channel, so every channel
 * is one contiguous run of H*W values. All values are finite; the constructor
 * rejects NaN and Inf.
 */
class FeatureMap {
public:
    FeatureMap() = default;

    /// Zero-filled map.
    FeatureMap(std::size_t channels, std::size_t height, std::size_t width);

    /// Takes ownership of `data`; its length must be channels*height*width.
    FeatureMap(std::size_t channels, std::size_t height, std::size_t width,
               std::vector<double> data);

    std::size_t channels() const noexcept { return channels_; }
    std::size_t height() const noexcept { return height_; }
    std::size_t width() const noexcept { return width_; }
    /// Spatial size H*W.
    std::size_t spatial() const noexcept { return height_ * width_; }
    std::size_t size() const noexcept { return data_.size(); }
    bool empty() const noexcept { return data_.empty(); }

    std::span<const double> data() const noexcept { return data_; }
    std::span<double> data() noexcept { return data_; }

    std::span<const double> channel(std::size_t c) const noexcept {
        return {data_.data() + c * spatial(), spatial()};
    }
    std::span<double> channel(std::size_t c) noexcept {
        return {data_.data() + c * spatial(), spatial()};
    }

    double at(std::size_t c, std::size_t y, std::size_t x) const noexcept {
        return data_[(c * height_ + y) * width_ + x];
    }
    double& at(std::size_t c, std::size_t y, std::size_t x) noexcept {
        return data_[(c * height_ + y) * width_ + x];
    }

    bool same_shape(const FeatureMap& other) const noexcept {
        return channels_ == other.channels_ && height_ == other.height_ &&
               width_ == other.width_;
    }

    /// Throws NumericError if any value is NaN or infinite.
    void check_finite() const;

    std::string shape_string() const;

    friend bool operator==(const FeatureMap&, const FeatureMap&) = default;

private:
    std::size_t channels_ = 0;
    std::size_t height_ = 0;
    std::size_t width_ = 0;
    std::vector<double> data_;
};

/// Row-major C x V matrix: one row per channel.
struct ChannelMatrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> values;

    std::span<const double> row(std::size_t r) const noexcept {
        return {values.data() + r * cols, cols};
    }
    std::span<double> row(std::size_t r) noexcept { return {values.data() + r * cols, cols}; }

    friend bool operator==(const ChannelMatrix&, const ChannelMatrix&) = default;
};

/**
 * Per-channel ascending order of spatial positions.
 *
 * order(c)[r] is the spatial index holding the r-th smallest value of channel
 * c. Ties are ordered by spatial index.
 */
struct RankIndex {
    std::size_t channels = 0;
    std::size_t spatial = 0;
    std::vector<std::uint32_t> positions;

    std::span<const std::uint32_t> order(std::size_t c) const noexcept {
        return {positions.data() + c * spatial, spatial};
    }
    std::span<std::uint32_t> order(std::size_t c) noexcept {
        return {positions.data() + c * spatial, spatial};
    }
};

struct SortedChannels {
    RankIndex index;
    ChannelMatrix sorted;
};

struct ChannelStats {
    double mean = 0.0;
    double stddev = 0.0;
};

ChannelMatrix flatten(const FeatureMap& m);
FeatureMap unflatten(const ChannelMatrix& matrix, std::size_t height, std::size_t width);
FeatureMap unflatten(ChannelMatrix&& matrix, std::size_t height, std::size_t width);

/// Stable ascending argsort of every channel.
SortedChannels argsort_channels(const FeatureMap& m);

/// Mean and population standard deviation of each channel.
std::vector<ChannelStats> channel_stats(const FeatureMap& m);
ChannelStats stats_of(std::span<const double> values);

/// Neumaier-compensated sum; order-insensitive to within a few ulps.
double compensated_sum(std::span<const double> values);

/**
 * Stable argsort of a single sequence into `order` (length values.size()).
 * Small inputs use a comparison sort, large ones MSD bucket passes on the
 * order-preserving bit pattern; both produce the identical permutation.
 * If `sorted_out` is non-empty it receives the gathered values.
 */
void argsort_into(std::span<const double> values, std::span<std::uint32_t> order,
                  std::span<double> sorted_out = {});

/// Ascending sort of a copy of `values` (same ordering as argsort_into).
void sort_values_into(std::span<const double> values, std::span<double> out);

} // namespace styleproj
