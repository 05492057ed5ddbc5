#include "styleproj/pyramid.hpp"

#include "styleproj/parallel.hpp"

#include <algorithm>
#include <string>

namespace styleproj {

namespace {

std::size_t half_up(std::size_t n) { return (n + 1) / 2; }

// 5-tap binomial along one axis of a single channel. `stride` steps between
// neighbouring samples along the axis, `count` samples per line.
void blur_lines(std::span<const double> src, std::span<double> dst, std::size_t lines,
                std::size_t count, std::size_t line_step, std::size_t stride) {
    for (std::size_t l = 0; l < lines; ++l) {
        const std::size_t base = l * line_step;
        const auto sample = [&](std::ptrdiff_t i) {
            const auto clamped = std::clamp<std::ptrdiff_t>(i, 0, static_cast<std::ptrdiff_t>(count) - 1);
            return src[base + static_cast<std::size_t>(clamped) * stride];
        };
        for (std::size_t i = 0; i < count; ++i) {
            const auto s = static_cast<std::ptrdiff_t>(i);
            const double outer = sample(s - 2) + sample(s + 2);
            const double inner = sample(s - 1) + sample(s + 1);
            dst[base + i * stride] = (outer + 4.0 * inner + 6.0 * sample(s)) / 16.0;
        }
    }
}

} // namespace

std::size_t max_depth(std::size_t height, std::size_t width) {
    const std::size_t side = std::min(height, width);
    std::size_t depth = 0;
    while (side >= (std::size_t{1} << depth)) ++depth;
    return depth;
}

FeatureMap blur(const FeatureMap& m) {
    const std::size_t h = m.height();
    const std::size_t w = m.width();
    FeatureMap out(m.channels(), h, w);
    parallel_for(m.channels(), [&](std::size_t c) {
        std::vector<double> rows(h * w);
        blur_lines(m.channel(c), rows, h, w, w, 1);
        blur_lines(rows, out.channel(c), w, h, 1, w);
    });
    return out;
}

FeatureMap downsample(const FeatureMap& m) {
    const std::size_t h = half_up(m.height());
    const std::size_t w = half_up(m.width());
    FeatureMap out(m.channels(), h, w);
    for (std::size_t c = 0; c < m.channels(); ++c)
        for (std::size_t y = 0; y < h; ++y)
            for (std::size_t x = 0; x < w; ++x) out.at(c, y, x) = m.at(c, 2 * y, 2 * x);
    return out;
}

FeatureMap upsample(const FeatureMap& m, std::size_t height, std::size_t width) {
    if (half_up(height) != m.height() || half_up(width) != m.width()) {
        throw ShapeError("upsample: " + m.shape_string() + " is not the half-size of " +
                         std::to_string(height) + "x" + std::to_string(width));
    }
    const auto interp = [](std::span<const double> line, std::size_t i) {
        const std::size_t j = i / 2;
        if (i % 2 == 0) return line[j];
        const std::size_t k = std::min(j + 1, line.size() - 1);
        return 0.5 * (line[j] + line[k]);
    };

    FeatureMap out(m.channels(), height, width);
    const std::size_t src_w = m.width();
    parallel_for(m.channels(), [&](std::size_t c) {
        const auto src = m.channel(c);
        // Horizontal pass on the coarse rows.
        std::vector<double> wide(m.height() * width);
        for (std::size_t y = 0; y < m.height(); ++y) {
            const auto line = src.subspan(y * src_w, src_w);
            for (std::size_t x = 0; x < width; ++x) wide[y * width + x] = interp(line, x);
        }
        // Vertical pass.
        std::vector<double> column(m.height());
        for (std::size_t x = 0; x < width; ++x) {
            for (std::size_t y = 0; y < m.height(); ++y) column[y] = wide[y * width + x];
            for (std::size_t y = 0; y < height; ++y) out.at(c, y, x) = interp(column, y);
        }
    });
    return out;
}

Pyramid encode(const FeatureMap& m, std::size_t depth) {
    if (depth == 0) throw std::invalid_argument("pyramid depth must be >= 1");
    if (depth > max_depth(m.height(), m.width())) {
        throw ShapeError("pyramid depth " + std::to_string(depth) + " too large for " +
                         m.shape_string() + " (max " +
                         std::to_string(max_depth(m.height(), m.width())) + ")");
    }
    Pyramid p;
    p.levels.reserve(depth + 1);
    FeatureMap current = m;
    for (std::size_t k = 0; k < depth; ++k) {
        FeatureMap coarse = downsample(blur(current));
        const FeatureMap predicted = upsample(coarse, current.height(), current.width());
        auto band = current.data();
        const auto pred = predicted.data();
        for (std::size_t i = 0; i < band.size(); ++i) band[i] -= pred[i];
        p.levels.push_back(std::move(current));
        current = std::move(coarse);
    }
    p.levels.push_back(std::move(current));
    return p;
}

FeatureMap decode(const Pyramid& p) {
    if (p.levels.empty()) throw ShapeError("decode: empty pyramid");
    for (std::size_t k = 0; k + 1 < p.levels.size(); ++k) {
        const FeatureMap& fine = p.levels[k];
        const FeatureMap& coarse = p.levels[k + 1];
        if (fine.channels() != coarse.channels() || half_up(fine.height()) != coarse.height() ||
            half_up(fine.width()) != coarse.width()) {
            throw ShapeError("decode: level " + std::to_string(k + 1) + " (" +
                             coarse.shape_string() + ") inconsistent with level " +
                             std::to_string(k) + " (" + fine.shape_string() + ")");
        }
    }
    FeatureMap current = p.levels.back();
    for (std::size_t k = p.levels.size() - 1; k-- > 0;) {
        const FeatureMap& band = p.levels[k];
        FeatureMap up = upsample(current, band.height(), band.width());
        auto values = up.data();
        const auto detail = band.data();
        for (std::size_t i = 0; i < values.size(); ++i) values[i] += detail[i];
        current = std::move(up);
    }
    return current;
}

PyramidTransformResult transform_in_pyramid_detailed(const FeatureMap& content,
                                                     const FeatureMap& style,
                                                     const TransformMethod& method,
                                                     const PyramidTransformOptions& options) {
    validate(method);
    PyramidTransformResult result;
    result.content = encode(content, options.depth);
    result.style = encode(style, options.depth);
    const std::size_t count = result.content.levels.size();
    result.fused.levels.reserve(count);
    for (std::size_t k = 0; k < count; ++k) {
        if (k + 1 == count && !options.include_residual) {
            result.fused.levels.push_back(result.content.levels[k]);
        } else {
            result.fused.levels.push_back(
                apply_method(method, result.content.levels[k], result.style.levels[k]));
        }
    }
    result.image = decode(result.fused);
    return result;
}

FeatureMap transform_in_pyramid(const FeatureMap& content, const FeatureMap& style,
                                const TransformMethod& method, std::size_t depth) {
    return transform_in_pyramid_detailed(content, style, method, {depth, true}).image;
}

} // namespace styleproj
