#pragma once

#include "styleproj/feature_map.hpp"

#include <cstdint>
#include <string>
#include <string_view>
#include <variant>

namespace styleproj {

// ---------------------------------------------------------------------------
// Method descriptors
// ---------------------------------------------------------------------------

struct StyleProjection {};
struct AdaIN {};
struct WCT {
    double eigen_floor = 1e-8;
};
struct StyleSwap {
    std::size_t patch = 3;
    std::size_t stride = 1;
};
struct RandomShuffle {
    std::uint64_t seed = 0;
    bool shared = false;
};
struct NoShuffle {};
struct Identity {};

using TransformMethod =
    std::variant<StyleProjection, AdaIN, WCT, StyleSwap, RandomShuffle, NoShuffle, Identity>;

/// Throws std::invalid_argument if the method's parameters are out of range.
void validate(const TransformMethod& method);

/// Canonical CLI name: "style-projection", "adain", "wct", "style-swap",
/// "random-shuffle", "no-shuffle", "identity".
std::string method_name(const TransformMethod& method);

/// Inverse of method_name, with default parameters. Throws std::invalid_argument.
TransformMethod parse_method(std::string_view name);

// ---------------------------------------------------------------------------
// Transforms
// ---------------------------------------------------------------------------

/**
 * Per-channel rank matching: the style value of rank r is written to the
 * spatial position holding the content value of rank r. Content and style must
 * share C and H*W; the output takes the content's spatial shape, and each of its
 * channels is a rearrangement of the matching style channel.
 */
FeatureMap style_project(const FeatureMap& content, const FeatureMap& style);

/**
 * Rank matching for unequal spatial sizes. The content position of rank r
 * (out of V) receives the style's empirical quantile at level r/(V-1),
 * linearly interpolated between adjacent sorted style values. When V equals
 * the style size the result is bit-identical to style_project. A single-pixel
 * content channel receives the style median.
 */
FeatureMap style_project_quantile(const FeatureMap& content, const FeatureMap& style);

/// z = sigma_s * (x - mu_c) / sigma_c + mu_s per channel; a constant content
/// channel maps to mu_s.
FeatureMap adain_transform(const FeatureMap& content, const FeatureMap& style);

/// Centers the content and decorrelates its channels with the inverse square
/// root of its channel covariance. Eigenvalues below `eigen_floor` are raised
/// to it first.
FeatureMap wct_whiten(const FeatureMap& content, double eigen_floor = 1e-8);

/// Whitening followed by coloring with the style covariance square root and
/// style channel means.
FeatureMap wct_transform(const FeatureMap& content, const FeatureMap& style,
                         double eigen_floor = 1e-8);

/**
 * Replaces every content patch (all channels jointly) by the style patch with
 * the highest normalized cross-correlation <content, style / |style|>, then
 * averages overlapping replacements. Zero-norm style patches score 0; ties go
 * to the lowest style patch index. Patch origins are laid out on a `stride`
 * grid in both maps, with the last row/column of origins always included so
 * that every pixel is covered.
 */
FeatureMap style_swap(const FeatureMap& content, const FeatureMap& style, std::size_t patch = 3,
                      std::size_t stride = 1);

/// Uniform random permutation of spatial positions: one per channel, or one
/// shared by all channels when `shared` is set. Deterministic for a seed.
FeatureMap random_shuffle(const FeatureMap& style, std::uint64_t seed, bool shared);

/// Dispatches to the transform named by `method`. StyleProjection falls back
/// to the quantile form when the spatial sizes differ.
FeatureMap apply_method(const TransformMethod& method, const FeatureMap& content,
                        const FeatureMap& style);

} // namespace styleproj
