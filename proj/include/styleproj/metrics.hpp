#pragma once

#include "styleproj/feature_map.hpp"
#include "styleproj/pyramid.hpp"

#include <Eigen/Core>

#include <string>

namespace styleproj {

/// G(i, j) = sum_p m(i, p) m(j, p), unnormalized. Only comparable between
/// maps with the same spatial size.
Eigen::MatrixXd gram(const FeatureMap& m);

/// Squared Frobenius norm of gram(a) - gram(b). Spatial sizes may differ.
double gram_distance(const FeatureMap& a, const FeatureMap& b);

/**
 * Sum over levels of |mu_a - mu_b|_2 + |sigma_a - sigma_b|_2, where mu and
 * sigma are the per-channel mean and population standard deviation vectors of
 * the level. The two pyramids need the same number of levels and channels;
 * spatial sizes may differ.
 */
double style_loss(const Pyramid& style, const Pyramid& stylized);

/// Euclidean norm of the element-wise difference; shapes must match.
double content_loss(const FeatureMap& content, const FeatureMap& stylized);
/// Euclidean norm over all levels taken together.
double content_loss(const Pyramid& content, const Pyramid& stylized);

struct KlOptions {
    std::size_t bins = 256;
    double epsilon = 1e-8;
};

/**
 * Sum over channels of KL(p || q) between per-channel histograms of `content`
 * (p) and `stylized` (q). Both use `bins` equal bins over the channel's joint
 * [min, max], with `epsilon` added to each bin before normalizing. A channel
 * whose joint range is a single point contributes 0.
 */
double kl_loss(const FeatureMap& content, const FeatureMap& stylized, const KlOptions& options = {});
double kl_loss(const Pyramid& content, const Pyramid& stylized, const KlOptions& options = {});

/// Spearman correlation between the per-channel rankings of `reference` and
/// `candidate`. Reference ties are ranked by position, candidate ties by the
/// reference rank, so a channel scores exactly 1 iff `candidate` is
/// non-decreasing along the reference ordering. Returns one value per channel.
std::vector<double> rank_correlation(const FeatureMap& reference, const FeatureMap& candidate);

struct LossWeights {
    double lambda_style = 10.0;
    double kappa_kl = 2.5;
};

void validate(const LossWeights& weights);

struct LossReport {
    double style = 0.0;
    double content = 0.0;
    double kl = 0.0;
    double gram_distance = 0.0;
    double total = 0.0;
};

/// total = content + lambda * style + kappa * kl.
LossReport total_loss(double content, double style, double kl, double gram_distance,
                      const LossWeights& weights = {});

/// Losses of a stylized image against its content and style, all encoded with
/// the same pyramid depth. Gram distance compares the finest levels.
LossReport evaluate_losses(const Pyramid& content, const Pyramid& style, const Pyramid& stylized,
                           const LossWeights& weights = {}, const KlOptions& kl = {});

/// `name=value` lines in fixed key order, values as %.8e (9 significant
/// digits). `header`, when non-empty, is written first as a `# ` comment.
std::string format_report(const LossReport& report, const std::string& header = {});

/// Parses format_report output. Comment and blank lines are skipped; unknown
/// keys or missing values throw std::invalid_argument.
LossReport parse_report(const std::string& text);

} // namespace styleproj
