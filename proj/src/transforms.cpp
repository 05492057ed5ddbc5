#include "styleproj/transforms.hpp"

#include "styleproj/parallel.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

namespace styleproj {

namespace {

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

void require_same_channels(const FeatureMap& content, const FeatureMap& style,
                           std::string_view op) {
    if (content.channels() != style.channels()) {
        throw ShapeError(std::string(op) + ": channel mismatch, content " + content.shape_string() +
                         " vs style " + style.shape_string());
    }
}

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

struct Moments {
    Eigen::VectorXd mean;
    Eigen::MatrixXd covariance;
    RowMatrix centered;
};

Moments channel_moments(const FeatureMap& m) {
    const auto channels = static_cast<Eigen::Index>(m.channels());
    const auto spatial = static_cast<Eigen::Index>(m.spatial());
    Moments out;
    out.mean.resize(channels);
    out.centered.resize(channels, spatial);
    for (Eigen::Index c = 0; c < channels; ++c) {
        const auto values = m.channel(static_cast<std::size_t>(c));
        out.mean(c) = compensated_sum(values) / static_cast<double>(spatial);
        for (Eigen::Index p = 0; p < spatial; ++p) {
            out.centered(c, p) = values[static_cast<std::size_t>(p)] - out.mean(c);
        }
    }
    out.covariance = out.centered * out.centered.transpose() / static_cast<double>(spatial);

    const double scale = std::max(1.0, out.covariance.cwiseAbs().maxCoeff());
    if ((out.covariance - out.covariance.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale) {
        throw NumericError("channel covariance is not symmetric");
    }
    out.covariance = (0.5 * (out.covariance + out.covariance.transpose())).eval();
    return out;
}

Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> decompose(const Eigen::MatrixXd& covariance) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(covariance);
    if (solver.info() != Eigen::Success) {
        throw NumericError("covariance eigendecomposition failed");
    }
    if (!solver.eigenvalues().allFinite()) {
        throw NumericError("covariance has non-finite eigenvalues");
    }
    return solver;
}

RowMatrix whiten_centered(const Moments& moments, double eigen_floor) {
    const auto solver = decompose(moments.covariance);
    const Eigen::VectorXd inv_sqrt =
        solver.eigenvalues().cwiseMax(eigen_floor).cwiseSqrt().cwiseInverse();
    const Eigen::MatrixXd& basis = solver.eigenvectors();
    const Eigen::MatrixXd whitening = basis * inv_sqrt.asDiagonal() * basis.transpose();
    return whitening * moments.centered;
}

FeatureMap from_rows(const RowMatrix& rows, std::size_t height, std::size_t width) {
    std::vector<double> data(rows.data(), rows.data() + rows.size());
    return {static_cast<std::size_t>(rows.rows()), height, width, std::move(data)};
}

// Uniform integer in [0, bound) from a 64-bit engine, by rejection so that
// the sequence depends only on the engine output (std::uniform_int_distribution
// is implementation-defined).
std::uint64_t bounded(std::mt19937_64& engine, std::uint64_t bound) {
    const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                                std::numeric_limits<std::uint64_t>::max() % bound;
    std::uint64_t draw;
    do {
        draw = engine();
    } while (draw >= limit);
    return draw % bound;
}

std::vector<std::uint32_t> random_permutation(std::size_t n, std::uint64_t seed) {
    std::vector<std::uint32_t> perm(n);
    std::iota(perm.begin(), perm.end(), 0u);
    std::mt19937_64 engine(seed);
    for (std::size_t i = n; i > 1; --i) {
        std::swap(perm[i - 1], perm[bounded(engine, i)]);
    }
    return perm;
}

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

std::vector<std::size_t> patch_origins(std::size_t extent, std::size_t patch, std::size_t stride) {
    std::vector<std::size_t> origins;
    for (std::size_t o = 0; o + patch <= extent; o += stride) origins.push_back(o);
    if (origins.back() + patch != extent) origins.push_back(extent - patch);
    return origins;
}

} // namespace

// ---------------------------------------------------------------------------
// Method descriptors
// ---------------------------------------------------------------------------

void validate(const TransformMethod& method) {
    std::visit(overloaded{
                   [](const StyleSwap& s) {
                       if (s.patch == 0 || s.patch % 2 == 0) {
                           throw std::invalid_argument("style-swap patch size must be odd and >= 1");
                       }
                       if (s.stride == 0) {
                           throw std::invalid_argument("style-swap stride must be >= 1");
                       }
                   },
                   [](const WCT& w) {
                       if (!(w.eigen_floor > 0.0) || !std::isfinite(w.eigen_floor)) {
                           throw std::invalid_argument("WCT eigenvalue floor must be positive");
                       }
                   },
                   [](const auto&) {},
               },
               method);
}

std::string method_name(const TransformMethod& method) {
    return std::visit(overloaded{
                          [](const StyleProjection&) { return "style-projection"; },
                          [](const AdaIN&) { return "adain"; },
                          [](const WCT&) { return "wct"; },
                          [](const StyleSwap&) { return "style-swap"; },
                          [](const RandomShuffle&) { return "random-shuffle"; },
                          [](const NoShuffle&) { return "no-shuffle"; },
                          [](const Identity&) { return "identity"; },
                      },
                      method);
}

TransformMethod parse_method(std::string_view name) {
    if (name == "style-projection" || name == "sp") return StyleProjection{};
    if (name == "adain") return AdaIN{};
    if (name == "wct") return WCT{};
    if (name == "style-swap") return StyleSwap{};
    if (name == "random-shuffle") return RandomShuffle{};
    if (name == "no-shuffle") return NoShuffle{};
    if (name == "identity") return Identity{};
    throw std::invalid_argument("unknown method '" + std::string(name) + "'");
}

// ---------------------------------------------------------------------------
// Style Projection
// ---------------------------------------------------------------------------

FeatureMap style_project(const FeatureMap& content, const FeatureMap& style) {
    require_same_channels(content, style, "style_project");
    if (content.spatial() != style.spatial()) {
        throw ShapeError("style_project: spatial size mismatch (content " +
                         content.shape_string() + ", style " + style.shape_string() +
                         "); use style_project_quantile for maps of different sizes");
    }
    const std::size_t spatial = content.spatial();
    FeatureMap out(content.channels(), content.height(), content.width());
    parallel_for(content.channels(), [&](std::size_t c) {
        // Reused across channels handled by the same thread.
        thread_local std::vector<std::uint32_t> order;
        thread_local std::vector<double> sorted_style;
        order.resize(spatial);
        sorted_style.resize(spatial);
        argsort_into(content.channel(c), order);
        sort_values_into(style.channel(c), sorted_style);
        auto dst = out.channel(c);
        for (std::size_t r = 0; r < spatial; ++r) dst[order[r]] = sorted_style[r];
    });
    return out;
}

FeatureMap style_project_quantile(const FeatureMap& content, const FeatureMap& style) {
    require_same_channels(content, style, "style_project_quantile");
    const std::size_t vc = content.spatial();
    const std::size_t vs = style.spatial();
    FeatureMap out(content.channels(), content.height(), content.width());
    parallel_for(content.channels(), [&](std::size_t c) {
        std::vector<std::uint32_t> order(vc);
        std::vector<double> sorted_style(vs);
        argsort_into(content.channel(c), order);
        sort_values_into(style.channel(c), sorted_style);

        // Quantile at level num/den of the sorted style, with the position
        // num*(vs-1)/den split into an exact integer part and remainder.
        const auto quantile = [&](std::uint64_t num, std::uint64_t den) {
            const std::uint64_t scaled = num * (vs - 1);
            const std::uint64_t lo = scaled / den;
            const std::uint64_t rem = scaled % den;
            if (rem == 0) return sorted_style[lo];
            return std::lerp(sorted_style[lo], sorted_style[lo + 1],
                             static_cast<double>(rem) / static_cast<double>(den));
        };

        auto dst = out.channel(c);
        if (vc == 1) {
            dst[0] = quantile(1, 2);
            return;
        }
        for (std::size_t r = 0; r < vc; ++r) dst[order[r]] = quantile(r, vc - 1);
    });
    return out;
}

// ---------------------------------------------------------------------------
// Baselines
// ---------------------------------------------------------------------------

FeatureMap adain_transform(const FeatureMap& content, const FeatureMap& style) {
    require_same_channels(content, style, "adain_transform");
    const auto content_stats = channel_stats(content);
    const auto style_stats = channel_stats(style);
    FeatureMap out(content.channels(), content.height(), content.width());
    parallel_for(content.channels(), [&](std::size_t c) {
        const auto [mu_c, sigma_c] = content_stats[c];
        const auto [mu_s, sigma_s] = style_stats[c];
        const auto src = content.channel(c);
        auto dst = out.channel(c);
        for (std::size_t p = 0; p < src.size(); ++p) {
            dst[p] = sigma_c == 0.0 ? mu_s : sigma_s * (src[p] - mu_c) / sigma_c + mu_s;
        }
    });
    return out;
}

FeatureMap wct_whiten(const FeatureMap& content, double eigen_floor) {
    validate(WCT{eigen_floor});
    if (content.spatial() < 2) throw ShapeError("wct_whiten: need at least 2 spatial positions");
    const Moments moments = channel_moments(content);
    return from_rows(whiten_centered(moments, eigen_floor), content.height(), content.width());
}

FeatureMap wct_transform(const FeatureMap& content, const FeatureMap& style, double eigen_floor) {
    require_same_channels(content, style, "wct_transform");
    validate(WCT{eigen_floor});
    if (content.spatial() < 2 || style.spatial() < 2) {
        throw ShapeError("wct_transform: need at least 2 spatial positions in both maps");
    }
    const Moments content_moments = channel_moments(content);
    const Moments style_moments = channel_moments(style);
    const RowMatrix whitened = whiten_centered(content_moments, eigen_floor);

    const auto solver = decompose(style_moments.covariance);
    const Eigen::VectorXd root = solver.eigenvalues().cwiseMax(0.0).cwiseSqrt();
    const Eigen::MatrixXd& basis = solver.eigenvectors();
    const Eigen::MatrixXd coloring = basis * root.asDiagonal() * basis.transpose();

    RowMatrix colored = coloring * whitened;
    colored.colwise() += style_moments.mean;
    FeatureMap out = from_rows(colored, content.height(), content.width());
    out.check_finite();
    return out;
}

FeatureMap style_swap(const FeatureMap& content, const FeatureMap& style, std::size_t patch,
                      std::size_t stride) {
    require_same_channels(content, style, "style_swap");
    validate(StyleSwap{patch, stride});
    if (patch > std::min({content.height(), content.width(), style.height(), style.width()})) {
        throw ShapeError("style_swap: patch " + std::to_string(patch) +
                         " larger than content " + content.shape_string() + " or style " +
                         style.shape_string());
    }

    const std::size_t channels = content.channels();
    const std::size_t dim = channels * patch * patch;
    const auto gather = [&](const FeatureMap& m, std::size_t y0, std::size_t x0, double* out) {
        for (std::size_t c = 0; c < channels; ++c)
            for (std::size_t dy = 0; dy < patch; ++dy)
                for (std::size_t dx = 0; dx < patch; ++dx) *out++ = m.at(c, y0 + dy, x0 + dx);
    };

    // Style patch bank: raw values for reconstruction, unit-norm copies for scoring.
    const auto sy = patch_origins(style.height(), patch, stride);
    const auto sx = patch_origins(style.width(), patch, stride);
    const std::size_t style_count = sy.size() * sx.size();
    std::vector<double> bank(style_count * dim);
    std::vector<double> unit(style_count * dim, 0.0);
    for (std::size_t i = 0; i < sy.size(); ++i) {
        for (std::size_t j = 0; j < sx.size(); ++j) {
            const std::size_t k = i * sx.size() + j;
            double* raw = bank.data() + k * dim;
            gather(style, sy[i], sx[j], raw);
            double norm = 0.0;
            for (std::size_t d = 0; d < dim; ++d) norm += raw[d] * raw[d];
            norm = std::sqrt(norm);
            if (norm > 0.0) {
                for (std::size_t d = 0; d < dim; ++d) unit[k * dim + d] = raw[d] / norm;
            }
        }
    }

    const auto cy = patch_origins(content.height(), patch, stride);
    const auto cx = patch_origins(content.width(), patch, stride);
    const std::size_t content_count = cy.size() * cx.size();
    std::vector<std::size_t> best(content_count);
    parallel_for(content_count, [&](std::size_t k) {
        std::vector<double> query(dim);
        gather(content, cy[k / cx.size()], cx[k % cx.size()], query.data());
        std::size_t arg = 0;
        double top = -std::numeric_limits<double>::infinity();
        for (std::size_t s = 0; s < style_count; ++s) {
            const double* u = unit.data() + s * dim;
            double score = 0.0;
            for (std::size_t d = 0; d < dim; ++d) score += query[d] * u[d];
            if (score > top) {
                top = score;
                arg = s;
            }
        }
        best[k] = arg;
    });

    // Overlap accumulation in fixed patch order.
    FeatureMap sum(channels, content.height(), content.width());
    std::vector<std::uint32_t> hits(content.spatial(), 0);
    for (std::size_t k = 0; k < content_count; ++k) {
        const std::size_t y0 = cy[k / cx.size()];
        const std::size_t x0 = cx[k % cx.size()];
        const double* src = bank.data() + best[k] * dim;
        for (std::size_t c = 0; c < channels; ++c)
            for (std::size_t dy = 0; dy < patch; ++dy)
                for (std::size_t dx = 0; dx < patch; ++dx) sum.at(c, y0 + dy, x0 + dx) += *src++;
        for (std::size_t dy = 0; dy < patch; ++dy)
            for (std::size_t dx = 0; dx < patch; ++dx) ++hits[(y0 + dy) * content.width() + x0 + dx];
    }
    for (std::size_t c = 0; c < channels; ++c) {
        auto values = sum.channel(c);
        for (std::size_t p = 0; p < values.size(); ++p) values[p] /= hits[p];
    }
    return sum;
}

FeatureMap random_shuffle(const FeatureMap& style, std::uint64_t seed, bool shared) {
    const std::size_t spatial = style.spatial();
    FeatureMap out(style.channels(), style.height(), style.width());
    std::vector<std::uint32_t> shared_perm;
    if (shared) shared_perm = random_permutation(spatial, seed);
    parallel_for(style.channels(), [&](std::size_t c) {
        const std::vector<std::uint32_t> perm =
            shared ? shared_perm : random_permutation(spatial, splitmix64(seed + c));
        const auto src = style.channel(c);
        auto dst = out.channel(c);
        for (std::size_t p = 0; p < spatial; ++p) dst[p] = src[perm[p]];
    });
    return out;
}

FeatureMap apply_method(const TransformMethod& method, const FeatureMap& content,
                        const FeatureMap& style) {
    validate(method);
    return std::visit(
        overloaded{
            [&](const StyleProjection&) {
                return content.spatial() == style.spatial() ? style_project(content, style)
                                                            : style_project_quantile(content, style);
            },
            [&](const AdaIN&) { return adain_transform(content, style); },
            [&](const WCT& w) { return wct_transform(content, style, w.eigen_floor); },
            [&](const StyleSwap& s) { return style_swap(content, style, s.patch, s.stride); },
            [&](const RandomShuffle& r) { return random_shuffle(style, r.seed, r.shared); },
            [&](const NoShuffle&) { return style; },
            [&](const Identity&) { return content; },
        },
        method);
}

} // namespace styleproj
