#include "styleproj/metrics.hpp"

#include "styleproj/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <sstream>

namespace styleproj {

namespace {

void require_same_channels(const FeatureMap& a, const FeatureMap& b, std::string_view op) {
    if (a.channels() != b.channels()) {
        throw ShapeError(std::string(op) + ": channel mismatch " + a.shape_string() + " vs " +
                         b.shape_string());
    }
}

void require_matching_levels(const Pyramid& a, const Pyramid& b, std::string_view op) {
    if (a.levels.size() != b.levels.size()) {
        throw ShapeError(std::string(op) + ": pyramids have " + std::to_string(a.levels.size()) +
                         " and " + std::to_string(b.levels.size()) + " levels");
    }
}

double channel_kl(std::span<const double> p_values, std::span<const double> q_values,
                  const KlOptions& options) {
    const auto [p_min, p_max] = std::minmax_element(p_values.begin(), p_values.end());
    const auto [q_min, q_max] = std::minmax_element(q_values.begin(), q_values.end());
    const double lo = std::min(*p_min, *q_min);
    const double hi = std::max(*p_max, *q_max);
    if (!(hi > lo)) return 0.0;

    const std::size_t bins = options.bins;
    const auto histogram = [&](std::span<const double> values) {
        std::vector<double> counts(bins, 0.0);
        for (const double v : values) {
            auto bin = static_cast<std::size_t>((v - lo) / (hi - lo) * static_cast<double>(bins));
            counts[std::min(bin, bins - 1)] += 1.0;
        }
        const double total =
            static_cast<double>(values.size()) + options.epsilon * static_cast<double>(bins);
        for (double& c : counts) c = (c + options.epsilon) / total;
        return counts;
    };
    const auto p = histogram(p_values);
    const auto q = histogram(q_values);
    double kl = 0.0;
    for (std::size_t b = 0; b < bins; ++b) {
        if (p[b] > 0.0) kl += p[b] * std::log(p[b] / q[b]);
    }
    // Rounding can leave a tiny negative residue when p ~ q.
    return std::max(kl, 0.0);
}

double squared_difference(const FeatureMap& a, const FeatureMap& b) {
    const auto x = a.data();
    const auto y = b.data();
    std::vector<double> squares(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double d = x[i] - y[i];
        squares[i] = d * d;
    }
    return compensated_sum(squares);
}

constexpr const char* kReportKeys[] = {"style", "content", "kl", "gram_distance", "total"};

} // namespace

Eigen::MatrixXd gram(const FeatureMap& m) {
    const std::size_t channels = m.channels();
    Eigen::MatrixXd g(channels, channels);
    // One task per row; each entry is its own compensated sum, so the result
    // does not depend on how rows are scheduled.
    parallel_for(channels, [&](std::size_t i) {
        std::vector<double> products(m.spatial());
        const auto a = m.channel(i);
        for (std::size_t j = i; j < channels; ++j) {
            const auto b = m.channel(j);
            for (std::size_t p = 0; p < products.size(); ++p) products[p] = a[p] * b[p];
            const double value = compensated_sum(products);
            g(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = value;
        }
    });
    for (Eigen::Index i = 0; i < g.rows(); ++i)
        for (Eigen::Index j = 0; j < i; ++j) g(i, j) = g(j, i);
    return g;
}

double gram_distance(const FeatureMap& a, const FeatureMap& b) {
    require_same_channels(a, b, "gram_distance");
    return (gram(a) - gram(b)).squaredNorm();
}

double style_loss(const Pyramid& style, const Pyramid& stylized) {
    require_matching_levels(style, stylized, "style_loss");
    double loss = 0.0;
    for (std::size_t k = 0; k < style.levels.size(); ++k) {
        require_same_channels(style.levels[k], stylized.levels[k], "style_loss");
        const auto a = channel_stats(style.levels[k]);
        const auto b = channel_stats(stylized.levels[k]);
        double mean_sq = 0.0;
        double std_sq = 0.0;
        for (std::size_t c = 0; c < a.size(); ++c) {
            mean_sq += (a[c].mean - b[c].mean) * (a[c].mean - b[c].mean);
            std_sq += (a[c].stddev - b[c].stddev) * (a[c].stddev - b[c].stddev);
        }
        loss += std::sqrt(mean_sq) + std::sqrt(std_sq);
    }
    return loss;
}

double content_loss(const FeatureMap& content, const FeatureMap& stylized) {
    if (!content.same_shape(stylized)) {
        throw ShapeError("content_loss: shape mismatch " + content.shape_string() + " vs " +
                         stylized.shape_string());
    }
    return std::sqrt(squared_difference(content, stylized));
}

double content_loss(const Pyramid& content, const Pyramid& stylized) {
    require_matching_levels(content, stylized, "content_loss");
    double sum = 0.0;
    for (std::size_t k = 0; k < content.levels.size(); ++k) {
        const double level = content_loss(content.levels[k], stylized.levels[k]);
        sum += level * level;
    }
    return std::sqrt(sum);
}

double kl_loss(const FeatureMap& content, const FeatureMap& stylized, const KlOptions& options) {
    require_same_channels(content, stylized, "kl_loss");
    if (options.bins < 2) throw std::invalid_argument("kl_loss: bins must be >= 2");
    if (!(options.epsilon > 0.0)) throw std::invalid_argument("kl_loss: epsilon must be positive");
    std::vector<double> per_channel(content.channels());
    parallel_for(content.channels(), [&](std::size_t c) {
        per_channel[c] = channel_kl(content.channel(c), stylized.channel(c), options);
    });
    return compensated_sum(per_channel);
}

double kl_loss(const Pyramid& content, const Pyramid& stylized, const KlOptions& options) {
    require_matching_levels(content, stylized, "kl_loss");
    double sum = 0.0;
    for (std::size_t k = 0; k < content.levels.size(); ++k) {
        sum += kl_loss(content.levels[k], stylized.levels[k], options);
    }
    return sum;
}

std::vector<double> rank_correlation(const FeatureMap& reference, const FeatureMap& candidate) {
    if (!reference.same_shape(candidate)) {
        throw ShapeError("rank_correlation: shape mismatch " + reference.shape_string() + " vs " +
                         candidate.shape_string());
    }
    const std::size_t n = reference.spatial();
    std::vector<double> rho(reference.channels(), 1.0);
    if (n < 2) return rho;

    parallel_for(reference.channels(), [&](std::size_t c) {
        std::vector<std::uint32_t> order(n);
        argsort_into(reference.channel(c), order);
        std::vector<std::uint32_t> ref_rank(n);
        for (std::size_t r = 0; r < n; ++r) ref_rank[order[r]] = static_cast<std::uint32_t>(r);

        const auto values = candidate.channel(c);
        std::vector<std::uint32_t> by_candidate(order);
        std::stable_sort(by_candidate.begin(), by_candidate.end(),
                         [&](std::uint32_t a, std::uint32_t b) { return values[a] < values[b]; });

        double d2 = 0.0;
        for (std::size_t r = 0; r < n; ++r) {
            const double d = static_cast<double>(r) - static_cast<double>(ref_rank[by_candidate[r]]);
            d2 += d * d;
        }
        const auto nn = static_cast<double>(n);
        rho[c] = 1.0 - 6.0 * d2 / (nn * (nn * nn - 1.0));
    });
    return rho;
}

void validate(const LossWeights& weights) {
    if (!std::isfinite(weights.lambda_style) || weights.lambda_style < 0.0 ||
        !std::isfinite(weights.kappa_kl) || weights.kappa_kl < 0.0) {
        throw std::invalid_argument("loss weights must be finite and non-negative");
    }
}

LossReport total_loss(double content, double style, double kl, double gram_distance,
                      const LossWeights& weights) {
    validate(weights);
    LossReport report{style, content, kl, gram_distance, 0.0};
    report.total = content + weights.lambda_style * style + weights.kappa_kl * kl;
    return report;
}

LossReport evaluate_losses(const Pyramid& content, const Pyramid& style, const Pyramid& stylized,
                           const LossWeights& weights, const KlOptions& kl) {
    return total_loss(content_loss(content, stylized), style_loss(style, stylized),
                      kl_loss(content, stylized, kl),
                      gram_distance(style.levels.front(), stylized.levels.front()), weights);
}

std::string format_report(const LossReport& report, const std::string& header) {
    const double values[] = {report.style, report.content, report.kl, report.gram_distance,
                             report.total};
    std::string out;
    if (!header.empty()) out += "# " + header + "\n";
    char buffer[64];
    for (std::size_t i = 0; i < std::size(kReportKeys); ++i) {
        std::snprintf(buffer, sizeof buffer, "%s=%.8e\n", kReportKeys[i], values[i]);
        out += buffer;
    }
    return out;
}

LossReport parse_report(const std::string& text) {
    std::map<std::string, double> found;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty() || line.front() == '#') continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw std::invalid_argument("malformed report line: " + line);
        const std::string key = line.substr(0, eq);
        if (std::find(std::begin(kReportKeys), std::end(kReportKeys), key) == std::end(kReportKeys)) {
            throw std::invalid_argument("unknown report key: " + key);
        }
        found[key] = std::stod(line.substr(eq + 1));
    }
    for (const char* key : kReportKeys) {
        if (!found.count(key)) throw std::invalid_argument(std::string("missing report key: ") + key);
    }
    return {found["style"], found["content"], found["kl"], found["gram_distance"], found["total"]};
}

} // namespace styleproj
