#pragma once

#include "styleproj/image_io.hpp"
#include "styleproj/metrics.hpp"
#include "styleproj/transforms.hpp"

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace styleproj {

struct Size2D {
    std::size_t width = 0;
    std::size_t height = 0;
};

/// Parses "WxH".
Size2D parse_size2d(const std::string& text);

struct Preprocess {
    std::optional<Size2D> resize;
    std::optional<Size2D> center_crop;
    std::optional<Size2D> random_crop;
};

struct StylizeConfig {
    TransformMethod method = StyleProjection{};
    std::size_t depth = 3;
    LossWeights weights;
    std::uint64_t seed = 0;
    bool include_residual = true;
    KlOptions kl;
    Preprocess preprocess;
};

/// Resize, then center or seeded random crop, as configured.
RasterImage preprocess(const RasterImage& image, const StylizeConfig& config);

/// Loads an image and applies `preprocess`.
RasterImage load_preprocessed(const std::filesystem::path& path, const StylizeConfig& config);

/// Comment line naming the encoder and weights, written above every report.
std::string report_header(const StylizeConfig& config);

/// Losses of an already-quantized stylized image against content and style.
LossReport evaluate_images(const RasterImage& content, const RasterImage& style,
                           const RasterImage& stylized, const StylizeConfig& config);

struct StylizeResult {
    RasterImage image;
    /// Empty when the output size differs from the content size.
    std::optional<LossReport> report;
};

StylizeResult cmd_stylize(const std::filesystem::path& content_path,
                          const std::filesystem::path& style_path,
                          const std::filesystem::path& out_path, const StylizeConfig& config,
                          std::ostream& out);

struct ShuffleStudyResult {
    std::filesystem::path no_shuffling;
    std::filesystem::path random_shuffling;
    std::filesystem::path style_projection;
    /// Finest-level rank correlation between the content features and the
    /// style-projected features, per channel.
    std::vector<double> rank_correlation;
    double style_loss_projection = 0.0;
    double style_loss_identity = 0.0;
};

ShuffleStudyResult cmd_shuffle_study(const std::filesystem::path& content_path,
                                     const std::filesystem::path& style_path,
                                     const std::filesystem::path& out_dir,
                                     const StylizeConfig& config, std::ostream& out);

LossReport cmd_evaluate(const std::filesystem::path& content_path,
                        const std::filesystem::path& style_path,
                        const std::filesystem::path& stylized_path, const StylizeConfig& config,
                        std::ostream& out);

struct BenchShape {
    std::size_t channels = 0;
    std::size_t height = 0;
    std::size_t width = 0;
};

/// Parses "CxHxW[,CxHxW...]".
std::vector<BenchShape> parse_bench_sizes(const std::string& text);

struct BenchRow {
    std::string method;
    BenchShape shape;
    double median_seconds = 0.0;
    double min_seconds = 0.0;
    std::uint64_t checksum = 0;
};

struct BenchSlope {
    std::string method;
    std::size_t channels = 0;
    double slope = 0.0;
};

struct BenchResult {
    std::vector<BenchRow> rows;
    /// Least-squares slope of log(min time) against log(H*W), per method and
    /// channel count with at least two distinct spatial sizes.
    std::vector<BenchSlope> slopes;
};

/// Deterministic pseudo-random map with values in [0, 1).
FeatureMap random_feature_map(const BenchShape& shape, std::uint64_t seed);

/// FNV-1a over the bit patterns of the values.
std::uint64_t checksum(const FeatureMap& m);

/// Least-squares slope of log(y) against log(x).
double loglog_slope(const std::vector<double>& x, const std::vector<double>& y);

BenchResult cmd_bench(const std::vector<BenchShape>& sizes,
                      const std::vector<TransformMethod>& methods, std::size_t repeats,
                      std::uint64_t seed, bool csv, std::ostream& out);

/// Entry point of the `styleproj` executable.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

} // namespace styleproj
