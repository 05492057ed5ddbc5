#include "styleproj/cli.hpp"

#include "styleproj/parallel.hpp"
#include "styleproj/pyramid.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <map>
#include <ostream>
#include <random>
#include <sstream>

namespace styleproj {

namespace fs = std::filesystem;

namespace {

std::vector<std::string> split(const std::string& text, char sep) {
    std::vector<std::string> parts;
    std::string part;
    std::istringstream in(text);
    while (std::getline(in, part, sep)) parts.push_back(part);
    return parts;
}

std::size_t parse_positive(const std::string& text, const std::string& what) {
    std::size_t used = 0;
    unsigned long long value = 0;
    try {
        value = std::stoull(text, &used);
    } catch (const std::exception&) {
        used = 0;
    }
    if (used != text.size() || value == 0 || text.empty() || text.front() == '-') {
        throw std::invalid_argument("invalid " + what + " '" + text + "'");
    }
    return static_cast<std::size_t>(value);
}

std::string format_size(const RasterImage& image) {
    return std::to_string(image.width) + "x" + std::to_string(image.height);
}

} // namespace

// ---------------------------------------------------------------------------
// Pipeline pieces
// ---------------------------------------------------------------------------

Size2D parse_size2d(const std::string& text) {
    const auto parts = split(text, 'x');
    if (parts.size() != 2) throw std::invalid_argument("expected WxH, got '" + text + "'");
    return {parse_positive(parts[0], "width"), parse_positive(parts[1], "height")};
}

RasterImage preprocess(const RasterImage& image, const StylizeConfig& config) {
    const Preprocess& p = config.preprocess;
    if (p.center_crop && p.random_crop) {
        throw std::invalid_argument("--center-crop and --random-crop are mutually exclusive");
    }
    RasterImage result = image;
    if (p.resize) result = resize_bilinear(result, p.resize->width, p.resize->height);
    if (p.center_crop) result = center_crop(result, p.center_crop->width, p.center_crop->height);
    if (p.random_crop) {
        result = random_crop(result, p.random_crop->width, p.random_crop->height, config.seed);
    }
    return result;
}

RasterImage load_preprocessed(const fs::path& path, const StylizeConfig& config) {
    return preprocess(load_image(path), config);
}

std::string report_header(const StylizeConfig& config) {
    std::ostringstream header;
    header << "encoder=laplacian-pyramid depth=" << config.depth
           << " lambda=" << config.weights.lambda_style << " kappa=" << config.weights.kappa_kl
           << " kl_bins=" << config.kl.bins << " kl_eps=" << config.kl.epsilon
           << " (pyramid features, not comparable to CNN-encoder losses)";
    return header.str();
}

LossReport evaluate_images(const RasterImage& content, const RasterImage& style,
                           const RasterImage& stylized, const StylizeConfig& config) {
    if (stylized.width != content.width || stylized.height != content.height) {
        throw ShapeError("stylized image " + format_size(stylized) + " differs in size from content " +
                         format_size(content));
    }
    const Pyramid c = encode(to_feature_map(content), config.depth);
    const Pyramid s = encode(to_feature_map(style), config.depth);
    const Pyramid z = encode(to_feature_map(stylized), config.depth);
    return evaluate_losses(c, s, z, config.weights, config.kl);
}

StylizeResult cmd_stylize(const fs::path& content_path, const fs::path& style_path,
                          const fs::path& out_path, const StylizeConfig& config, std::ostream& out) {
    validate(config.weights);
    const RasterImage content = load_preprocessed(content_path, config);
    const RasterImage style = load_preprocessed(style_path, config);
    const auto fused = transform_in_pyramid_detailed(to_feature_map(content), to_feature_map(style),
                                                     config.method,
                                                     {config.depth, config.include_residual});
    StylizeResult result{from_feature_map(fused.image), std::nullopt};
    save_png(result.image, out_path);

    if (result.image.width == content.width && result.image.height == content.height) {
        result.report = evaluate_images(content, style, result.image, config);
        out << format_report(*result.report, report_header(config));
    } else {
        out << "# loss report skipped: output " << format_size(result.image)
            << " differs from content " << format_size(content) << "\n";
    }
    return result;
}

ShuffleStudyResult cmd_shuffle_study(const fs::path& content_path, const fs::path& style_path,
                                     const fs::path& out_dir, const StylizeConfig& config,
                                     std::ostream& out) {
    const RasterImage content_image = load_preprocessed(content_path, config);
    const RasterImage style_image = load_preprocessed(style_path, config);
    const FeatureMap content = to_feature_map(content_image);
    const FeatureMap style = to_feature_map(style_image);
    const PyramidTransformOptions options{config.depth, config.include_residual};

    fs::create_directories(out_dir);
    ShuffleStudyResult result;
    result.no_shuffling = out_dir / "no_shuffling.png";
    result.random_shuffling = out_dir / "random_shuffling.png";
    result.style_projection = out_dir / "style_projection.png";

    const auto no_shuffle = transform_in_pyramid_detailed(content, style, NoShuffle{}, options);
    save_png(from_feature_map(no_shuffle.image), result.no_shuffling);

    // Shuffling is done on the finest features (the pixels) so that every
    // channel keeps the style's exact value multiset; the codec round trip
    // keeps the pipeline identical to the other two modes.
    const FeatureMap shuffled = random_shuffle(style, config.seed, false);
    save_png(from_feature_map(decode(encode(shuffled, config.depth))), result.random_shuffling);

    const auto projected = transform_in_pyramid_detailed(content, style, StyleProjection{}, options);
    const RasterImage projected_image = from_feature_map(projected.image);
    save_png(projected_image, result.style_projection);

    result.rank_correlation =
        rank_correlation(projected.content.levels.front(), projected.fused.levels.front());
    const Pyramid style_pyramid = encode(style, config.depth);
    result.style_loss_projection =
        style_loss(style_pyramid, encode(to_feature_map(projected_image), config.depth));
    result.style_loss_identity = style_loss(style_pyramid, encode(content, config.depth));

    char line[128];
    out << "no_shuffling=" << result.no_shuffling.string() << "\n";
    out << "random_shuffling=" << result.random_shuffling.string() << "\n";
    out << "style_projection=" << result.style_projection.string() << "\n";
    for (std::size_t c = 0; c < result.rank_correlation.size(); ++c) {
        std::snprintf(line, sizeof line, "rank_correlation_%zu=%.8e\n", c, result.rank_correlation[c]);
        out << line;
    }
    std::snprintf(line, sizeof line, "style_loss_projection=%.8e\n", result.style_loss_projection);
    out << line;
    std::snprintf(line, sizeof line, "style_loss_identity=%.8e\n", result.style_loss_identity);
    out << line;
    return result;
}

LossReport cmd_evaluate(const fs::path& content_path, const fs::path& style_path,
                        const fs::path& stylized_path, const StylizeConfig& config,
                        std::ostream& out) {
    validate(config.weights);
    const RasterImage content = load_preprocessed(content_path, config);
    const RasterImage style = load_preprocessed(style_path, config);
    const RasterImage stylized = load_preprocessed(stylized_path, config);
    const LossReport report = evaluate_images(content, style, stylized, config);
    out << format_report(report, report_header(config));
    return report;
}

// ---------------------------------------------------------------------------
// Benchmark
// ---------------------------------------------------------------------------

std::vector<BenchShape> parse_bench_sizes(const std::string& text) {
    std::vector<BenchShape> shapes;
    for (const auto& item : split(text, ',')) {
        const auto parts = split(item, 'x');
        if (parts.size() != 3) throw std::invalid_argument("expected CxHxW, got '" + item + "'");
        shapes.push_back({parse_positive(parts[0], "channel count"),
                          parse_positive(parts[1], "height"), parse_positive(parts[2], "width")});
    }
    if (shapes.empty()) throw std::invalid_argument("no bench sizes given");
    return shapes;
}

FeatureMap random_feature_map(const BenchShape& shape, std::uint64_t seed) {
    std::mt19937_64 engine(seed);
    std::vector<double> data(shape.channels * shape.height * shape.width);
    for (double& v : data) v = static_cast<double>(engine() >> 11) * 0x1.0p-53;
    return {shape.channels, shape.height, shape.width, std::move(data)};
}

std::uint64_t checksum(const FeatureMap& m) {
    std::uint64_t hash = 0xcbf29ce484222325ULL;
    for (const double v : m.data()) {
        auto bits = std::bit_cast<std::uint64_t>(v);
        for (int i = 0; i < 8; ++i) {
            hash ^= bits & 0xFF;
            hash *= 0x100000001b3ULL;
            bits >>= 8;
        }
    }
    return hash;
}

double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size() || x.size() < 2) {
        throw std::invalid_argument("slope fit needs at least two points");
    }
    const auto n = static_cast<double>(x.size());
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double lx = std::log(x[i]);
        const double ly = std::log(y[i]);
        sx += lx;
        sy += ly;
        sxx += lx * lx;
        sxy += lx * ly;
    }
    const double denom = n * sxx - sx * sx;
    if (denom == 0.0) throw std::invalid_argument("slope fit needs distinct x values");
    return (n * sxy - sx * sy) / denom;
}

BenchResult cmd_bench(const std::vector<BenchShape>& sizes,
                      const std::vector<TransformMethod>& methods, std::size_t repeats,
                      std::uint64_t seed, bool csv, std::ostream& out) {
    if (repeats == 0) throw std::invalid_argument("repeats must be >= 1");
    BenchResult result;
    for (const auto& method : methods) {
        validate(method);
        for (const auto& shape : sizes) {
            const FeatureMap content = random_feature_map(shape, seed);
            const FeatureMap style = random_feature_map(shape, seed + 1);
            std::vector<double> times;
            std::uint64_t first = 0;
            for (std::size_t r = 0; r < repeats; ++r) {
                const auto start = std::chrono::steady_clock::now();
                const FeatureMap output = apply_method(method, content, style);
                const auto stop = std::chrono::steady_clock::now();
                times.push_back(std::chrono::duration<double>(stop - start).count());
                const std::uint64_t sum = checksum(output);
                if (r == 0) {
                    first = sum;
                } else if (sum != first) {
                    throw NumericError("non-deterministic output from " + method_name(method));
                }
            }
            std::sort(times.begin(), times.end());
            const double median = times.size() % 2 ? times[times.size() / 2]
                                                   : 0.5 * (times[times.size() / 2 - 1] +
                                                            times[times.size() / 2]);
            result.rows.push_back({method_name(method), shape, median, times.front(), first});
        }
    }

    // Group rows by (method, C) for the scaling fit.
    std::map<std::pair<std::string, std::size_t>, std::pair<std::vector<double>, std::vector<double>>>
        groups;
    for (const auto& row : result.rows) {
        auto& [v, t] = groups[{row.method, row.shape.channels}];
        v.push_back(static_cast<double>(row.shape.height * row.shape.width));
        t.push_back(row.min_seconds);
    }
    for (const auto& [key, points] : groups) {
        const auto& [v, t] = points;
        if (std::adjacent_find(v.begin(), v.end(), std::not_equal_to<>()) == v.end()) continue;
        result.slopes.push_back({key.first, key.second, loglog_slope(v, t)});
    }

    char line[256];
    if (csv) {
        out << "method,channels,height,width,median_s,min_s,checksum\n";
    } else {
        std::snprintf(line, sizeof line, "%-18s %14s %12s %12s %18s\n", "method", "CxHxW",
                      "median_s", "min_s", "checksum");
        out << line;
    }
    for (const auto& row : result.rows) {
        const std::string shape = std::to_string(row.shape.channels) + "x" +
                                  std::to_string(row.shape.height) + "x" +
                                  std::to_string(row.shape.width);
        if (csv) {
            std::snprintf(line, sizeof line, "%s,%zu,%zu,%zu,%.6e,%.6e,%016llx\n", row.method.c_str(),
                          row.shape.channels, row.shape.height, row.shape.width, row.median_seconds,
                          row.min_seconds, static_cast<unsigned long long>(row.checksum));
        } else {
            std::snprintf(line, sizeof line, "%-18s %14s %12.6f %12.6f   %016llx\n", row.method.c_str(),
                          shape.c_str(), row.median_seconds, row.min_seconds,
                          static_cast<unsigned long long>(row.checksum));
        }
        out << line;
    }
    for (const auto& s : result.slopes) {
        std::snprintf(line, sizeof line, "# loglog_slope method=%s channels=%zu slope=%.4f\n",
                      s.method.c_str(), s.channels, s.slope);
        out << line;
    }
    return result;
}

// ---------------------------------------------------------------------------
// Command line
// ---------------------------------------------------------------------------

namespace {

struct SharedFlags {
    std::string method = "style-projection";
    std::size_t depth = 3;
    double lambda = 10.0;
    double kappa = 2.5;
    std::uint64_t seed = 0;
    std::string resize;
    std::string center_crop;
    std::string random_crop;
    bool no_residual = false;
    std::size_t kl_bins = 256;
    double kl_eps = 1e-8;
    std::size_t patch = 3;
    std::size_t stride = 1;
    double eigen_floor = 1e-8;
    std::string config;
};

void add_shared_flags(CLI::App& sub, SharedFlags& f, bool with_method) {
    if (with_method) {
        sub.add_option("--method", f.method,
                       "Feature transform: style-projection, adain, wct, style-swap, "
                       "random-shuffle, no-shuffle, identity")
            ->capture_default_str();
    }
    sub.add_option("--depth", f.depth, "Pyramid depth (number of band-pass levels)")
        ->capture_default_str()
        ->check(CLI::PositiveNumber);
    sub.add_option("--lambda", f.lambda, "Style loss weight")->capture_default_str();
    sub.add_option("--kappa", f.kappa, "KL loss weight")->capture_default_str();
    sub.add_option("--seed", f.seed, "Seed for random shuffling and --random-crop")
        ->capture_default_str();
    sub.add_option("--resize", f.resize, "Resize inputs to WxH (bilinear) before cropping");
    sub.add_option("--center-crop", f.center_crop, "Center-crop inputs to WxH");
    sub.add_option("--random-crop", f.random_crop, "Crop inputs to WxH at a seeded random offset");
    sub.add_flag("--no-residual", f.no_residual,
                 "Pass the content low-pass residual through untransformed");
    sub.add_option("--kl-bins", f.kl_bins, "Histogram bins for the KL loss")
        ->capture_default_str()
        ->check(CLI::Range(std::size_t{2}, std::numeric_limits<std::size_t>::max()));
    sub.add_option("--kl-eps", f.kl_eps, "Additive histogram smoothing for the KL loss")
        ->capture_default_str()
        ->check(CLI::PositiveNumber);
    if (with_method) {
        sub.add_option("--patch", f.patch, "Style-swap patch size (odd)")->capture_default_str();
        sub.add_option("--stride", f.stride, "Style-swap patch stride")->capture_default_str();
        sub.add_option("--eigen-floor", f.eigen_floor, "WCT eigenvalue floor")
            ->capture_default_str();
    }
    sub.add_option("--config", f.config,
                   "Flat key=value file of defaults (keys are flag names without dashes); "
                   "command-line flags take precedence");
}

// Fills options that were not given on the command line from the config file.
void apply_config_file(CLI::App& sub, const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError(path + ": cannot open config file");
    std::string line;
    std::size_t number = 0;
    while (std::getline(in, line)) {
        ++number;
        const auto first = line.find_first_not_of(" \t");
        if (first == std::string::npos || line[first] == '#') continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw std::invalid_argument(path + ":" + std::to_string(number) + ": expected key=value");
        }
        auto trim = [](std::string s) {
            const auto b = s.find_first_not_of(" \t\r");
            const auto e = s.find_last_not_of(" \t\r");
            return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
        };
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key == "config") throw std::invalid_argument(path + ": nested config not supported");
        CLI::Option* opt = sub.get_option_no_throw("--" + key);
        if (opt == nullptr) {
            throw std::invalid_argument(path + ":" + std::to_string(number) + ": unknown key '" +
                                        key + "'");
        }
        if (opt->count() > 0) continue;
        opt->add_result(value);
        opt->run_callback();
    }
}

StylizeConfig to_config(const SharedFlags& f) {
    StylizeConfig config;
    TransformMethod method = parse_method(f.method);
    if (auto* swap = std::get_if<StyleSwap>(&method)) *swap = {f.patch, f.stride};
    if (auto* wct = std::get_if<WCT>(&method)) wct->eigen_floor = f.eigen_floor;
    if (auto* shuffle = std::get_if<RandomShuffle>(&method)) shuffle->seed = f.seed;
    validate(method);
    config.method = method;
    config.depth = f.depth;
    config.weights = {f.lambda, f.kappa};
    validate(config.weights);
    config.seed = f.seed;
    config.include_residual = !f.no_residual;
    config.kl = {f.kl_bins, f.kl_eps};
    if (!f.resize.empty()) config.preprocess.resize = parse_size2d(f.resize);
    if (!f.center_crop.empty()) config.preprocess.center_crop = parse_size2d(f.center_crop);
    if (!f.random_crop.empty()) config.preprocess.random_crop = parse_size2d(f.random_crop);
    return config;
}

} // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Rank-matching style projection on a Laplacian pyramid: stylize images, run the feature "
                 "shuffling study, evaluate losses and benchmark transform kernels.\n"
                 "Environment: STYLEPROJ_THREADS caps worker threads."};
    app.name("styleproj");
    app.require_subcommand(1);

    std::string content, style, output, stylized;
    SharedFlags flags;

    CLI::App* stylize = app.add_subcommand("stylize", "Stylize a content image with a style image");
    stylize->add_option("content", content, "Content image (PNG or JPEG)")->required();
    stylize->add_option("style", style, "Style image (PNG or JPEG)")->required();
    stylize->add_option("output", output, "Output PNG path")->required();
    add_shared_flags(*stylize, flags, true);

    CLI::App* study = app.add_subcommand(
        "shuffle-study", "Write no_shuffling.png, random_shuffling.png and style_projection.png");
    study->add_option("content", content, "Content image (PNG or JPEG)")->required();
    study->add_option("style", style, "Style image (PNG or JPEG)")->required();
    study->add_option("out_dir", output, "Output directory")->required();
    add_shared_flags(*study, flags, false);

    CLI::App* evaluate = app.add_subcommand("evaluate", "Report losses of a stylized image");
    evaluate->add_option("content", content, "Content image")->required();
    evaluate->add_option("style", style, "Style image")->required();
    evaluate->add_option("stylized", stylized, "Stylized image (same size as content)")->required();
    add_shared_flags(*evaluate, flags, false);

    std::string bench_sizes = "8x64x64,8x128x128,8x256x256";
    std::string bench_methods = "style-projection";
    std::size_t repeats = 5;
    std::uint64_t bench_seed = 0;
    bool csv = false;
    CLI::App* bench = app.add_subcommand("bench", "Time transform kernels on random feature maps");
    bench->add_option("--sizes", bench_sizes, "Comma-separated CxHxW shapes")->capture_default_str();
    bench->add_option("--methods", bench_methods, "Comma-separated method names")
        ->capture_default_str();
    bench->add_option("--repeats", repeats, "Timed runs per method and size")
        ->capture_default_str()
        ->check(CLI::PositiveNumber);
    bench->add_option("--seed", bench_seed, "Seed of the input generator")->capture_default_str();
    bench->add_flag("--csv", csv, "Emit CSV instead of an aligned table");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e, out, err);
    }

    try {
        for (CLI::App* sub : {stylize, study, evaluate}) {
            if (sub->parsed() && !flags.config.empty()) apply_config_file(*sub, flags.config);
        }
        if (stylize->parsed()) {
            cmd_stylize(content, style, output, to_config(flags), out);
        } else if (study->parsed()) {
            cmd_shuffle_study(content, style, output, to_config(flags), out);
        } else if (evaluate->parsed()) {
            cmd_evaluate(content, style, stylized, to_config(flags), out);
        } else if (bench->parsed()) {
            std::vector<TransformMethod> methods;
            for (const auto& name : split(bench_methods, ',')) methods.push_back(parse_method(name));
            cmd_bench(parse_bench_sizes(bench_sizes), methods, repeats, bench_seed, csv, out);
        }
    } catch (const std::exception& e) {
        err << "styleproj: error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}

} // namespace styleproj
