#include "styleproj/feature_map.hpp"

#include "styleproj/parallel.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <numeric>

namespace styleproj {

FeatureMap::FeatureMap(std::size_t channels, std::size_t height, std::size_t width)
    : FeatureMap(channels, height, width, std::vector<double>(channels * height * width, 0.0)) {}

FeatureMap::FeatureMap(std::size_t channels, std::size_t height, std::size_t width,
                       std::vector<double> data)
    : channels_(channels), height_(height), width_(width), data_(std::move(data)) {
    if (channels == 0 || height == 0 || width == 0) {
        throw ShapeError("FeatureMap dimensions must be positive, got " + shape_string());
    }
    if (spatial() > std::numeric_limits<std::uint32_t>::max()) {
        throw ShapeError("FeatureMap spatial size exceeds 32-bit index range: " + shape_string());
    }
    if (data_.size() != channels * height * width) {
        throw ShapeError("FeatureMap data length " + std::to_string(data_.size()) +
                         " does not match " + shape_string());
    }
    check_finite();
}

void FeatureMap::check_finite() const {
    for (std::size_t i = 0; i < data_.size(); ++i) {
        if (!std::isfinite(data_[i])) {
            throw NumericError("non-finite value at flat index " + std::to_string(i) + " of " +
                               shape_string());
        }
    }
}

std::string FeatureMap::shape_string() const {
    return std::to_string(channels_) + "x" + std::to_string(height_) + "x" +
           std::to_string(width_);
}

ChannelMatrix flatten(const FeatureMap& m) {
    const auto data = m.data();
    return {m.channels(), m.spatial(), std::vector<double>(data.begin(), data.end())};
}

FeatureMap unflatten(const ChannelMatrix& matrix, std::size_t height, std::size_t width) {
    return unflatten(ChannelMatrix(matrix), height, width);
}

FeatureMap unflatten(ChannelMatrix&& matrix, std::size_t height, std::size_t width) {
    if (matrix.cols != height * width) {
        throw ShapeError("cannot reshape " + std::to_string(matrix.cols) + " columns into " +
                         std::to_string(height) + "x" + std::to_string(width));
    }
    return {matrix.rows, height, width, std::move(matrix.values)};
}

// ---------------------------------------------------------------------------
// Sorting kernels
// ---------------------------------------------------------------------------

namespace {

// Below this length a comparison sort beats the bucket passes.
constexpr std::size_t kBucketThreshold = 256;

// Monotone map from double to uint64: a < b (as doubles) implies key(a) < key(b).
inline std::uint64_t order_key(double v) noexcept {
    const auto bits = std::bit_cast<std::uint64_t>(v);
    return (bits & 0x8000000000000000ULL) ? ~bits : (bits | 0x8000000000000000ULL);
}

inline double from_order_key(std::uint64_t key) noexcept {
    const std::uint64_t bits =
        (key & 0x8000000000000000ULL) ? (key & ~0x8000000000000000ULL) : ~key;
    return std::bit_cast<double>(bits);
}

struct KeyedIndex {
    std::uint64_t key;
    std::uint32_t index;
};

// Buckets of at most this many items are finished by a comparison sort.
constexpr std::size_t kSmallBucket = 48;

// MSD bucket pass on the top bits of (key - min), recursing on large buckets.
// Each level consumes at least 8 significant bits, so the depth is bounded.
// The scatter is stable and `less` breaks key ties by index, so the result
// is a stable sort when items arrive in index order.
template <typename Item, typename KeyOf, typename Less>
void msd_bucket_sort(std::span<Item> items, std::span<Item> scratch, KeyOf key_of, Less less) {
    const std::size_t n = items.size();
    if (n <= kSmallBucket) {
        if (n <= 16) {
            for (std::size_t i = 1; i < n; ++i) {
                Item item = items[i];
                std::size_t j = i;
                for (; j > 0 && less(item, items[j - 1]); --j) items[j] = items[j - 1];
                items[j] = item;
            }
        } else {
            std::sort(items.begin(), items.end(), less);
        }
        return;
    }
    std::uint64_t lo = key_of(items[0]);
    std::uint64_t hi = lo;
    for (const Item& item : items) {
        const std::uint64_t k = key_of(item);
        lo = std::min(lo, k);
        hi = std::max(hi, k);
    }
    if (lo == hi) return;

    const unsigned bits = std::clamp<unsigned>(std::bit_width(n) - 2, 8, 11);
    const unsigned width = std::bit_width(hi - lo);
    const unsigned shift = width > bits ? width - bits : 0;
    std::vector<std::uint32_t> start((std::size_t{1} << bits) + 1, 0);
    for (const Item& item : items) ++start[((key_of(item) - lo) >> shift) + 1];
    std::partial_sum(start.begin(), start.end(), start.begin());
    std::vector<std::uint32_t> fill(start.begin(), start.end() - 1);
    for (const Item& item : items) scratch[fill[(key_of(item) - lo) >> shift]++] = item;
    std::copy(scratch.begin(), scratch.begin() + n, items.begin());

    if (shift == 0) {
        // Each bucket holds a single key; ties are already in index order.
        return;
    }
    for (std::size_t b = 0; b + 1 < start.size(); ++b) {
        const std::size_t first = start[b];
        const std::size_t count = start[b + 1] - first;
        if (count > 1) {
            msd_bucket_sort(items.subspan(first, count), scratch.subspan(first, count), key_of, less);
        }
    }
}

// Sorts raw keys: stable LSD passes on the top significant bits of
// (key - min), then a local sort of every run sharing that prefix.
void sort_keys_large(std::vector<std::uint64_t>& keys, std::vector<std::uint64_t>& scratch) {
    const std::size_t n = keys.size();
    const auto [lo_it, hi_it] = std::minmax_element(keys.begin(), keys.end());
    const std::uint64_t lo = *lo_it;
    const std::uint64_t hi = *hi_it;
    if (lo == hi) return;

    const unsigned passes = n >= (std::size_t{1} << 16) ? 3 : 2;
    const unsigned bits = passes == 3 ? std::clamp<unsigned>((std::bit_width(n) + 10) / 3, 9, 11)
                                      : std::clamp<unsigned>((std::bit_width(n) + 4) / 2, 6, 11);
    const std::uint64_t mask = (std::uint64_t{1} << bits) - 1;
    const unsigned width = std::bit_width(hi - lo);
    const unsigned shift = width > passes * bits ? width - passes * bits : 0;

    std::vector<std::vector<std::uint32_t>> count(passes, std::vector<std::uint32_t>(mask + 2, 0));
    for (const std::uint64_t k : keys) {
        const std::uint64_t prefix = (k - lo) >> shift;
        for (unsigned p = 0; p < passes; ++p) ++count[p][((prefix >> (p * bits)) & mask) + 1];
    }
    scratch.resize(n);
    for (unsigned p = 0; p < passes; ++p) {
        auto& start = count[p];
        std::partial_sum(start.begin(), start.end(), start.begin());
        const unsigned digit_shift = shift + p * bits;
        for (const std::uint64_t k : keys) scratch[start[((k - lo) >> digit_shift) & mask]++] = k;
        keys.swap(scratch);
    }
    if (shift == 0) return;

    const std::span<std::uint64_t> all(keys);
    const std::span<std::uint64_t> spare(scratch);
    for (std::size_t i = 0; i < n;) {
        const std::uint64_t prefix = (keys[i] - lo) >> shift;
        std::size_t j = i + 1;
        while (j < n && ((keys[j] - lo) >> shift) == prefix) ++j;
        if (j - i > 1) {
            msd_bucket_sort(all.subspan(i, j - i), spare.subspan(i, j - i),
                            [](std::uint64_t k) { return k; }, std::less<>());
        }
        i = j;
    }
}

// Argsort for large inputs. Words packed as (prefix << index_bits | index)
// are sorted on the prefix by LSD passes; runs sharing a prefix are then
// finished on the full keys. Items start in index order, so ties stay in
// index order.
void argsort_large(std::span<const double> values, std::span<std::uint32_t> order) {
    const std::size_t n = values.size();
    thread_local std::vector<std::uint64_t> keys, packed, scratch;
    keys.resize(n);
    packed.resize(n);
    scratch.resize(n);

    std::uint64_t lo = std::numeric_limits<std::uint64_t>::max();
    std::uint64_t hi = 0;
    for (std::size_t i = 0; i < n; ++i) {
        // +0.0 folds -0.0 into +0.0 so the two compare as a tie.
        const std::uint64_t k = order_key(values[i] + 0.0);
        keys[i] = k;
        lo = std::min(lo, k);
        hi = std::max(hi, k);
    }
    if (lo == hi) {
        std::iota(order.begin(), order.end(), 0u);
        return;
    }

    // Float keys crowd into few exponents, so the prefix is kept well above
    // log2(n) bits.
    const unsigned passes = n >= (std::size_t{1} << 16) ? 3 : 2;
    const unsigned bits = passes == 3 ? std::clamp<unsigned>((std::bit_width(n) + 10) / 3, 9, 11)
                                      : std::clamp<unsigned>((std::bit_width(n) + 4) / 2, 6, 11);
    const unsigned index_bits = std::bit_width(n - 1);
    const std::uint64_t mask = (std::uint64_t{1} << bits) - 1;
    const std::uint64_t index_mask = (std::uint64_t{1} << index_bits) - 1;
    const unsigned width = std::bit_width(hi - lo);
    const unsigned shift = width > passes * bits ? width - passes * bits : 0;

    std::vector<std::vector<std::uint32_t>> count(passes, std::vector<std::uint32_t>(mask + 2, 0));
    for (std::size_t i = 0; i < n; ++i) {
        const std::uint64_t prefix = (keys[i] - lo) >> shift;
        packed[i] = (prefix << index_bits) | i;
        for (unsigned p = 0; p < passes; ++p) ++count[p][((prefix >> (p * bits)) & mask) + 1];
    }
    for (unsigned p = 0; p < passes; ++p) {
        auto& start = count[p];
        std::partial_sum(start.begin(), start.end(), start.begin());
        const unsigned digit_shift = index_bits + p * bits;
        for (const std::uint64_t w : packed) scratch[start[(w >> digit_shift) & mask]++] = w;
        packed.swap(scratch);
    }

    const auto by_key = [&](std::uint32_t a, std::uint32_t b) {
        return keys[a] != keys[b] ? keys[a] < keys[b] : a < b;
    };
    std::vector<KeyedIndex> run, tmp;
    for (std::size_t i = 0; i < n;) {
        const std::uint64_t prefix = packed[i] >> index_bits;
        std::size_t j = i;
        for (; j < n && (packed[j] >> index_bits) == prefix; ++j) {
            order[j] = static_cast<std::uint32_t>(packed[j] & index_mask);
        }
        // With shift 0 a prefix is a whole key and the run is already in index order.
        if (shift > 0 && j - i > 1) {
            const auto slice = order.subspan(i, j - i);
            if (slice.size() <= kSmallBucket) {
                std::sort(slice.begin(), slice.end(), by_key);
            } else {
                run.resize(slice.size());
                tmp.resize(slice.size());
                for (std::size_t r = 0; r < slice.size(); ++r) run[r] = {keys[slice[r]], slice[r]};
                msd_bucket_sort(
                    std::span<KeyedIndex>(run), std::span<KeyedIndex>(tmp),
                    [](const KeyedIndex& k) { return k.key; },
                    [](const KeyedIndex& a, const KeyedIndex& b) {
                        return a.key != b.key ? a.key < b.key : a.index < b.index;
                    });
                for (std::size_t r = 0; r < slice.size(); ++r) slice[r] = run[r].index;
            }
        }
        i = j;
    }
}

} // namespace

void argsort_into(std::span<const double> values, std::span<std::uint32_t> order,
                  std::span<double> sorted_out) {
    const std::size_t n = values.size();
    if (n < kBucketThreshold) {
        std::vector<KeyedIndex> items(n);
        for (std::size_t i = 0; i < n; ++i) {
            items[i] = {order_key(values[i] + 0.0), static_cast<std::uint32_t>(i)};
        }
        std::sort(items.begin(), items.end(), [](const KeyedIndex& a, const KeyedIndex& b) {
            return a.key != b.key ? a.key < b.key : a.index < b.index;
        });
        for (std::size_t r = 0; r < n; ++r) order[r] = items[r].index;
    } else {
        argsort_large(values, order);
    }
    if (!sorted_out.empty()) {
        for (std::size_t r = 0; r < n; ++r) sorted_out[r] = values[order[r]];
    }
}

void sort_values_into(std::span<const double> values, std::span<double> out) {
    const std::size_t n = values.size();
    // Keys keep the sign of zero, so the output is a bitwise permutation of the input.
    thread_local std::vector<std::uint64_t> keys, scratch;
    keys.resize(n);
    std::transform(values.begin(), values.end(), keys.begin(), order_key);
    if (n < kBucketThreshold) {
        std::sort(keys.begin(), keys.end());
    } else {
        sort_keys_large(keys, scratch);
    }
    std::transform(keys.begin(), keys.begin() + n, out.begin(), from_order_key);
}

SortedChannels argsort_channels(const FeatureMap& m) {
    SortedChannels result;
    const std::size_t channels = m.channels();
    const std::size_t spatial = m.spatial();
    result.index = {channels, spatial, std::vector<std::uint32_t>(channels * spatial)};
    result.sorted = {channels, spatial, std::vector<double>(channels * spatial)};
    parallel_for(channels, [&](std::size_t c) {
        argsort_into(m.channel(c), result.index.order(c), result.sorted.row(c));
    });
    return result;
}

// ---------------------------------------------------------------------------
// Statistics
// ---------------------------------------------------------------------------

double compensated_sum(std::span<const double> values) {
    double sum = 0.0;
    double compensation = 0.0;
    for (const double v : values) {
        const double t = sum + v;
        if (std::abs(sum) >= std::abs(v)) {
            compensation += (sum - t) + v;
        } else {
            compensation += (v - t) + sum;
        }
        sum = t;
    }
    return sum + compensation;
}

ChannelStats stats_of(std::span<const double> values) {
    const auto n = static_cast<double>(values.size());
    const double mean = compensated_sum(values) / n;
    std::vector<double> squared(values.size());
    std::transform(values.begin(), values.end(), squared.begin(), [mean](double v) {
        const double d = v - mean;
        return d * d;
    });
    return {mean, std::sqrt(compensated_sum(squared) / n)};
}

std::vector<ChannelStats> channel_stats(const FeatureMap& m) {
    std::vector<ChannelStats> stats(m.channels());
    parallel_for(m.channels(), [&](std::size_t c) { stats[c] = stats_of(m.channel(c)); });
    return stats;
}

} // namespace styleproj
