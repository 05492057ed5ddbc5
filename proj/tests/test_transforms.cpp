#include "styleproj/metrics.hpp"
#include "styleproj/parallel.hpp"
#include "styleproj/transforms.hpp"

#include "test_support.hpp"

#include <doctest.h>

#include <limits>

using namespace styleproj;
using namespace testing_support;

namespace {

std::vector<double> values_of(const FeatureMap& m) { return {m.data().begin(), m.data().end()}; }

// NCC patch matching by direct enumeration, following the documented rules.
FeatureMap brute_style_swap(const FeatureMap& content, const FeatureMap& style, std::size_t patch,
                            std::size_t stride) {
    auto origins = [&](std::size_t extent) {
        std::vector<std::size_t> o;
        for (std::size_t i = 0; i + patch <= extent; i += stride) o.push_back(i);
        if (o.back() + patch != extent) o.push_back(extent - patch);
        return o;
    };
    const auto sy = origins(style.height()), sx = origins(style.width());
    const auto cy = origins(content.height()), cx = origins(content.width());
    FeatureMap sum(content.channels(), content.height(), content.width());
    std::vector<int> hits(content.spatial(), 0);
    for (auto y0 : cy) {
        for (auto x0 : cx) {
            double best = -std::numeric_limits<double>::infinity();
            std::size_t by = 0, bx = 0;
            for (auto sy0 : sy) {
                for (auto sx0 : sx) {
                    double dot = 0, norm = 0;
                    for (std::size_t c = 0; c < content.channels(); ++c)
                        for (std::size_t dy = 0; dy < patch; ++dy)
                            for (std::size_t dx = 0; dx < patch; ++dx) {
                                const double s = style.at(c, sy0 + dy, sx0 + dx);
                                dot += content.at(c, y0 + dy, x0 + dx) * s;
                                norm += s * s;
                            }
                    const double score = norm > 0 ? dot / std::sqrt(norm) : 0.0;
                    if (score > best + 1e-12) {
                        best = score;
                        by = sy0;
                        bx = sx0;
                    }
                }
            }
            for (std::size_t c = 0; c < content.channels(); ++c)
                for (std::size_t dy = 0; dy < patch; ++dy)
                    for (std::size_t dx = 0; dx < patch; ++dx)
                        sum.at(c, y0 + dy, x0 + dx) += style.at(c, by + dy, bx + dx);
            for (std::size_t dy = 0; dy < patch; ++dy)
                for (std::size_t dx = 0; dx < patch; ++dx) ++hits[(y0 + dy) * content.width() + x0 + dx];
        }
    }
    for (std::size_t c = 0; c < content.channels(); ++c)
        for (std::size_t p = 0; p < content.spatial(); ++p) sum.channel(c)[p] /= hits[p];
    return sum;
}

// Mixes channels so the covariance has off-diagonal structure.
FeatureMap correlated_map(std::mt19937_64& rng, std::size_t c, std::size_t h, std::size_t w) {
    const auto base = random_map(rng, c, h, w);
    const auto mix = random_map(rng, 1, c, c);
    FeatureMap out(c, h, w);
    for (std::size_t i = 0; i < c; ++i)
        for (std::size_t j = 0; j < c; ++j)
            for (std::size_t p = 0; p < base.spatial(); ++p)
                out.channel(i)[p] += (mix.at(0, i, j) + (i == j ? 1.5 : 0.0)) * base.channel(j)[p];
    return out;
}

} // namespace

TEST_CASE("style_project examples") {
    CHECK(values_of(style_project(map_from(1, 1, 3, {3, 1, 2}), map_from(1, 1, 3, {10, 20, 30}))) ==
          std::vector<double>{30, 10, 20});
    CHECK(values_of(style_project(map_from(1, 1, 2, {1, 2}), map_from(1, 1, 2, {5, 5}))) ==
          std::vector<double>{5, 5});

    std::mt19937_64 rng(2);
    const auto x = random_map(rng, 3, 8, 9);
    CHECK(style_project(x, x) == x);
}

TEST_CASE("style_project errors") {
    CHECK_THROWS_AS(style_project(FeatureMap(2, 2, 2), FeatureMap(3, 2, 2)), ShapeError);
    try {
        style_project(FeatureMap(1, 2, 2), FeatureMap(1, 3, 3));
        FAIL("expected ShapeError");
    } catch (const ShapeError& e) {
        CHECK(std::string(e.what()).find("style_project_quantile") != std::string::npos);
    }
}

TEST_CASE("style_project agrees with the brute-force rank oracle") {
    std::mt19937_64 rng(21);
    for (int trial = 0; trial < 40; ++trial) {
        const std::size_t c = 1 + trial % 4;
        const std::size_t h = 1 + trial % 6;
        const std::size_t w = 1 + (trial * 5) % 31;
        const auto content = trial % 3 == 0 ? tied_map(rng, c, h, w) : random_map(rng, c, h, w);
        const auto style = trial % 4 == 0 ? tied_map(rng, c, w, h) : random_map(rng, c, w, h);
        CHECK(style_project(content, style) == brute_style_project(content, style));
    }
}

TEST_CASE("style_project: multiset preservation and rank alignment") {
    std::mt19937_64 rng(22);
    for (int trial = 0; trial < 40; ++trial) {
        const auto content = random_map(rng, 3, 16, 20);
        const auto style = trial % 2 ? tied_map(rng, 3, 20, 16) : random_map(rng, 3, 20, 16, 0, 5);
        const auto z = style_project(content, style);
        CHECK(z.height() == content.height());
        CHECK(z.width() == content.width());
        for (std::size_t c = 0; c < 3; ++c) {
            REQUIRE(sorted_channel(z, c) == sorted_channel(style, c));
            // Non-decreasing along the content order.
            const auto order = brute_argsort(content.channel(c));
            for (std::size_t r = 0; r + 1 < order.size(); ++r)
                REQUIRE(z.channel(c)[order[r]] <= z.channel(c)[order[r + 1]]);
            if (trial % 2 == 0) {
                // Distinct style values: the output ranks are the content ranks.
                REQUIRE(brute_argsort(z.channel(c)) == order);
            }
        }
    }
}

TEST_CASE("style_project output statistics equal the style's") {
    std::mt19937_64 rng(23);
    const auto content = random_map(rng, 4, 32, 32);
    const auto style = random_map(rng, 4, 32, 32, -3, 7);
    const auto a = channel_stats(style_project(content, style));
    const auto b = channel_stats(style);
    for (std::size_t c = 0; c < 4; ++c) {
        CHECK(std::abs(a[c].mean - b[c].mean) <= 1e-12 * std::abs(b[c].mean));
        CHECK(std::abs(a[c].stddev - b[c].stddev) <= 1e-12 * b[c].stddev);
    }
}

TEST_CASE("style_project is independent of the thread count") {
    std::mt19937_64 rng(24);
    const auto content = random_map(rng, 6, 40, 40);
    const auto style = random_map(rng, 6, 40, 40);
    set_thread_limit(1);
    const auto serial = style_project(content, style);
    set_thread_limit(4);
    const auto threaded = style_project(content, style);
    set_thread_limit(0);
    CHECK(serial == threaded);
}

TEST_CASE("style_project_quantile examples") {
    CHECK(values_of(style_project_quantile(map_from(1, 1, 3, {3, 1, 2}),
                                           map_from(1, 1, 3, {10, 20, 30}))) ==
          std::vector<double>{30, 10, 20});
    CHECK(values_of(style_project_quantile(map_from(1, 1, 2, {1, 2}),
                                           map_from(1, 2, 2, {0, 10, 20, 30}))) ==
          std::vector<double>{0, 30});
    // Constant content: quantiles laid out in spatial order.
    CHECK(values_of(style_project_quantile(map_from(1, 1, 3, {5, 5, 5}),
                                           map_from(1, 1, 5, {40, 0, 30, 10, 20}))) ==
          std::vector<double>{0, 20, 40});
    // Single-pixel content receives the median.
    CHECK(values_of(style_project_quantile(map_from(1, 1, 1, {9}), map_from(1, 1, 4, {4, 1, 3, 2}))) ==
          std::vector<double>{2.5});
    CHECK(values_of(style_project_quantile(map_from(1, 1, 1, {9}), map_from(1, 1, 3, {4, 1, 3}))) ==
          std::vector<double>{3});
    CHECK_THROWS_AS(style_project_quantile(FeatureMap(2, 2, 2), FeatureMap(1, 2, 2)), ShapeError);
}

TEST_CASE("style_project_quantile matches direct interpolation of the empirical quantile") {
    std::mt19937_64 rng(25);
    for (int trial = 0; trial < 20; ++trial) {
        const auto content = random_map(rng, 2, 3 + trial % 5, 4 + trial % 3);
        const auto style = random_map(rng, 2, 5 + trial % 7, 2 + trial % 4);
        const auto z = style_project_quantile(content, style);
        for (std::size_t c = 0; c < 2; ++c) {
            const auto rank = brute_ranks(content.channel(c));
            const auto sorted = sorted_channel(style, c);
            const double vc = static_cast<double>(content.spatial());
            for (std::size_t i = 0; i < rank.size(); ++i) {
                const double pos = rank[i] / (vc - 1.0) * (sorted.size() - 1.0);
                const auto lo = static_cast<std::size_t>(std::floor(pos));
                const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
                const double f = pos - lo;
                const double expected = sorted[lo] * (1 - f) + sorted[hi] * f;
                REQUIRE(z.channel(c)[i] == doctest::Approx(expected).epsilon(1e-12));
            }
        }
    }
}

TEST_CASE("adain_transform examples and properties") {
    CHECK(values_of(adain_transform(map_from(1, 1, 2, {-1, 1}), map_from(1, 1, 2, {4, 6}))) ==
          std::vector<double>{4, 6});
    CHECK(values_of(adain_transform(map_from(1, 1, 2, {3, 3}), map_from(1, 1, 2, {8, 12}))) ==
          std::vector<double>{10, 10});

    std::mt19937_64 rng(26);
    for (int trial = 0; trial < 20; ++trial) {
        const auto content = random_map(rng, 3, 10, 12);
        const auto style = random_map(rng, 3, 7, 9, -4, 9);
        const auto z = adain_transform(content, style);
        const auto a = channel_stats(z);
        const auto b = channel_stats(style);
        for (std::size_t c = 0; c < 3; ++c) {
            CHECK(a[c].mean == doctest::Approx(b[c].mean).epsilon(1e-9));
            CHECK(a[c].stddev == doctest::Approx(b[c].stddev).epsilon(1e-9));
            const auto order = brute_argsort(content.channel(c));
            for (std::size_t r = 0; r + 1 < order.size(); ++r)
                REQUIRE(z.channel(c)[order[r]] <= z.channel(c)[order[r + 1]]);
        }
        CHECK(max_abs_diff(adain_transform(content, content), content) < 1e-12);
    }
}

TEST_CASE("wct whitening yields identity covariance") {
    std::mt19937_64 rng(27);
    for (int trial = 0; trial < 10; ++trial) {
        const auto content = correlated_map(rng, 2 + trial % 6, 12, 14);
        const auto white = wct_whiten(content);
        const auto cov = brute_covariance(white);
        for (std::size_t i = 0; i < cov.size(); ++i)
            for (std::size_t j = 0; j < cov.size(); ++j)
                REQUIRE(std::abs(cov[i][j] - (i == j ? 1.0 : 0.0)) <= 1e-6);
    }
}

TEST_CASE("wct_transform properties") {
    std::mt19937_64 rng(28);
    SUBCASE("single channel reduces to AdaIN") {
        const auto content = random_map(rng, 1, 9, 9);
        const auto style = random_map(rng, 1, 6, 11, 2, 5);
        CHECK(max_abs_diff(wct_transform(content, style), adain_transform(content, style)) < 1e-12);
    }
    SUBCASE("style equal to content reproduces content") {
        const auto content = correlated_map(rng, 5, 10, 10);
        CHECK(max_abs_diff(wct_transform(content, content), content) < 1e-6);
    }
    SUBCASE("output covariance and means follow the style") {
        const auto content = correlated_map(rng, 4, 16, 16);
        const auto style = correlated_map(rng, 4, 12, 20);
        const auto z = wct_transform(content, style);
        const auto cz = brute_covariance(z);
        const auto cs = brute_covariance(style);
        for (std::size_t i = 0; i < 4; ++i)
            for (std::size_t j = 0; j < 4; ++j) CHECK(std::abs(cz[i][j] - cs[i][j]) < 1e-6);
        const auto mz = channel_stats(z);
        const auto ms = channel_stats(style);
        for (std::size_t c = 0; c < 4; ++c) CHECK(mz[c].mean == doctest::Approx(ms[c].mean));
    }
    SUBCASE("rank-deficient covariance stays finite") {
        auto content = random_map(rng, 3, 8, 8);
        for (std::size_t p = 0; p < content.spatial(); ++p) content.channel(2)[p] = content.channel(0)[p];
        const auto z = wct_transform(content, random_map(rng, 3, 8, 8));
        CHECK_NOTHROW(z.check_finite());
    }
    SUBCASE("errors") {
        CHECK_THROWS_AS(wct_transform(FeatureMap(1, 1, 1), FeatureMap(1, 2, 2)), ShapeError);
        CHECK_THROWS_AS(wct_transform(FeatureMap(1, 2, 2), FeatureMap(1, 2, 2), 0.0),
                        std::invalid_argument);
        CHECK_THROWS_AS(wct_transform(FeatureMap(2, 2, 2), FeatureMap(1, 2, 2)), ShapeError);
    }
}

TEST_CASE("style_swap examples") {
    std::mt19937_64 rng(29);
    SUBCASE("exact copies reconstruct the content") {
        const auto content = random_map(rng, 2, 6, 7);
        FeatureMap style = random_map(rng, 2, 11, 12);
        for (std::size_t c = 0; c < 2; ++c)
            for (std::size_t y = 0; y < 6; ++y)
                for (std::size_t x = 0; x < 7; ++x) style.at(c, y + 3, x + 2) = content.at(c, y, x);
        CHECK(max_abs_diff(style_swap(content, style, 3, 1), content) < 1e-12);
        CHECK(max_abs_diff(style_swap(content, content, 3, 2), content) < 1e-12);
    }
    SUBCASE("single candidate patch") {
        const auto content = random_map(rng, 3, 3, 3);
        const auto style = random_map(rng, 3, 3, 3);
        CHECK(style_swap(content, style, 3, 1) == style);
    }
    SUBCASE("1x1 scalar patches all normalize to the same direction") {
        // Both positive style scalars normalize to 1, so every content value
        // ties and the lowest index wins.
        const auto z = style_swap(map_from(1, 1, 2, {1, 9}), map_from(1, 1, 2, {2, 8}), 1, 1);
        CHECK(values_of(z) == std::vector<double>{2, 2});
        // A sign difference does discriminate.
        const auto signed_z = style_swap(map_from(1, 1, 2, {-1, 9}), map_from(1, 1, 2, {2, -8}), 1, 1);
        CHECK(values_of(signed_z) == std::vector<double>{-8, 2});
    }
    SUBCASE("zero-norm style patches score zero") {
        const auto z = style_swap(map_from(1, 1, 2, {-1, -2}), map_from(1, 1, 2, {0, 5}), 1, 1);
        CHECK(values_of(z) == std::vector<double>{0, 0});
    }
    SUBCASE("errors") {
        CHECK_THROWS_AS(style_swap(FeatureMap(1, 2, 2), FeatureMap(1, 5, 5), 3, 1), ShapeError);
        CHECK_THROWS_AS(style_swap(FeatureMap(1, 5, 5), FeatureMap(1, 5, 5), 2, 1),
                        std::invalid_argument);
        CHECK_THROWS_AS(style_swap(FeatureMap(1, 5, 5), FeatureMap(1, 5, 5), 3, 0),
                        std::invalid_argument);
    }
}

TEST_CASE("style_swap matches brute-force enumeration") {
    std::mt19937_64 rng(30);
    for (int trial = 0; trial < 12; ++trial) {
        const std::size_t patch = trial % 2 ? 3 : 1;
        const std::size_t stride = 1 + trial % 3;
        const auto content = random_map(rng, 2, 5 + trial % 4, 6 + trial % 3);
        const auto style = random_map(rng, 2, 6 + trial % 3, 5 + trial % 5);
        CHECK(max_abs_diff(style_swap(content, style, patch, stride),
                           brute_style_swap(content, style, patch, stride)) < 1e-12);
    }
}

TEST_CASE("random_shuffle contracts") {
    std::mt19937_64 rng(31);
    const auto style = random_map(rng, 4, 9, 11);
    for (const bool shared : {false, true}) {
        const auto a = random_shuffle(style, 42, shared);
        CHECK(a == random_shuffle(style, 42, shared));
        CHECK_FALSE(a == random_shuffle(style, 43, shared));
        for (std::size_t c = 0; c < 4; ++c) CHECK(sorted_channel(a, c) == sorted_channel(style, c));
    }

    const auto shared = random_shuffle(style, 7, true);
    CHECK(gram_distance(style, shared) <= 1e-9);

    const auto independent = random_shuffle(style, 7, false);
    const auto g0 = gram(style);
    const auto g1 = gram(independent);
    for (Eigen::Index i = 0; i < g0.rows(); ++i) CHECK(g1(i, i) == doctest::Approx(g0(i, i)).epsilon(1e-12));
    // Independent per-channel shuffles decorrelate channels in general.
    CHECK(gram_distance(style, independent) > 1e-6);
}

TEST_CASE("apply_method dispatch") {
    std::mt19937_64 rng(32);
    const auto content = random_map(rng, 3, 6, 6);
    const auto style = random_map(rng, 3, 6, 6);
    CHECK(apply_method(NoShuffle{}, content, style) == style);
    CHECK(apply_method(Identity{}, content, style) == content);
    CHECK(apply_method(StyleProjection{}, content, style) == style_project(content, style));
    CHECK(apply_method(AdaIN{}, content, style) == adain_transform(content, style));
    CHECK(apply_method(WCT{1e-6}, content, style) == wct_transform(content, style, 1e-6));
    CHECK(apply_method(StyleSwap{3, 2}, content, style) == style_swap(content, style, 3, 2));
    CHECK(apply_method(RandomShuffle{5, true}, content, style) == random_shuffle(style, 5, true));

    const auto small = random_map(rng, 3, 4, 5);
    CHECK(apply_method(StyleProjection{}, content, small) == style_project_quantile(content, small));
    CHECK_THROWS_AS(apply_method(StyleSwap{4, 1}, content, style), std::invalid_argument);
}

TEST_CASE("method names round-trip") {
    for (const char* name : {"style-projection", "adain", "wct", "style-swap", "random-shuffle",
                             "no-shuffle", "identity"}) {
        CHECK(method_name(parse_method(name)) == name);
    }
    CHECK_THROWS_AS(parse_method("vgg"), std::invalid_argument);
}
