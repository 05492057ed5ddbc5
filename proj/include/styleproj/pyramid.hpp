#pragma once

#include "styleproj/feature_map.hpp"
#include "styleproj/transforms.hpp"

#include <vector>

namespace styleproj {

/**
 * Difference-of-lowpass pyramid.
 *
 * levels[0 .. depth-1] are band-pass maps, levels[depth] the low-pass residual.
 * Level k has spatial size ceil(H / 2^k) x ceil(W / 2^k); all levels share C.
 */
struct Pyramid {
    std::vector<FeatureMap> levels;

    std::size_t depth() const noexcept { return levels.empty() ? 0 : levels.size() - 1; }
    const FeatureMap& residual() const { return levels.back(); }
};

/// Largest depth accepted by encode for an H x W map: 2^(depth-1) <= min(H, W).
std::size_t max_depth(std::size_t height, std::size_t width);

/// Separable [1,4,6,4,1]/16 blur with edge-replicate padding.
FeatureMap blur(const FeatureMap& m);
/// Keeps every second row and column starting at index 0.
FeatureMap downsample(const FeatureMap& m);
/// Linear interpolation matched to `downsample`: even target samples copy the
/// source, odd ones average their two neighbours (replicating at the far edge).
FeatureMap upsample(const FeatureMap& m, std::size_t height, std::size_t width);

Pyramid encode(const FeatureMap& m, std::size_t depth);
/// Exact inverse of encode; throws ShapeError on inconsistent level sizes.
FeatureMap decode(const Pyramid& p);

struct PyramidTransformOptions {
    std::size_t depth = 3;
    /// When false the content residual is passed through untouched.
    bool include_residual = true;
};

struct PyramidTransformResult {
    Pyramid content;
    Pyramid style;
    Pyramid fused;
    FeatureMap image;
};

/// Encodes both maps, applies `method` level by level, and decodes the fused
/// pyramid. Returns the intermediate pyramids alongside the decoded image.
PyramidTransformResult transform_in_pyramid_detailed(const FeatureMap& content,
                                                     const FeatureMap& style,
                                                     const TransformMethod& method,
                                                     const PyramidTransformOptions& options);

FeatureMap transform_in_pyramid(const FeatureMap& content, const FeatureMap& style,
                                const TransformMethod& method, std::size_t depth);

} // namespace styleproj
