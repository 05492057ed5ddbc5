#include "styleproj/metrics.hpp"
#include "styleproj/pyramid.hpp"

#include "test_support.hpp"

#include <doctest.h>

using namespace styleproj;
using namespace testing_support;

TEST_CASE("level sizes follow the ceil-halving rule") {
    std::mt19937_64 rng(50);
    for (const auto [h, w] : {std::pair{16, 16}, {17, 9}, {33, 8}, {5, 7}, {8, 31}}) {
        const auto m = random_map(rng, 2, h, w);
        const std::size_t depth = max_depth(h, w);
        const Pyramid p = encode(m, depth);
        REQUIRE(p.levels.size() == depth + 1);
        std::size_t eh = h, ew = w;
        for (const auto& level : p.levels) {
            CHECK(level.channels() == 2);
            CHECK(level.height() == eh);
            CHECK(level.width() == ew);
            eh = (eh + 1) / 2;
            ew = (ew + 1) / 2;
        }
    }
    CHECK(max_depth(1, 1) == 1);
    CHECK(max_depth(7, 9) == 3);
    CHECK(max_depth(8, 9) == 4);
}

TEST_CASE("encode preconditions") {
    CHECK_THROWS_AS(encode(FeatureMap(1, 4, 4), 0), std::invalid_argument);
    CHECK_THROWS_AS(encode(FeatureMap(1, 4, 4), 4), ShapeError);
    CHECK_NOTHROW(encode(FeatureMap(1, 4, 4), 3));
}

TEST_CASE("depth-1 reconstruction identity") {
    std::mt19937_64 rng(51);
    const auto m = random_map(rng, 3, 11, 6);
    const Pyramid p = encode(m, 1);
    REQUIRE(p.levels.size() == 2);
    FeatureMap sum = upsample(p.levels[1], m.height(), m.width());
    for (std::size_t i = 0; i < sum.size(); ++i) sum.data()[i] += p.levels[0].data()[i];
    CHECK(max_abs_diff(sum, m) < 1e-6);
}

TEST_CASE("constant image has empty bands") {
    FeatureMap m(2, 13, 10);
    for (auto& v : m.data()) v = 0.7;
    const Pyramid p = encode(m, 3);
    for (std::size_t k = 0; k < 3; ++k)
        for (double v : p.levels[k].data()) REQUIRE(std::abs(v) <= 1e-9);
    for (double v : p.residual().data()) CHECK(v == doctest::Approx(0.7).epsilon(1e-12));
}

TEST_CASE("decode inverts encode") {
    std::mt19937_64 rng(52);
    for (int trial = 0; trial < 30; ++trial) {
        const std::size_t h = 8 + trial % 9;
        const std::size_t w = 8 + (trial * 3) % 11;
        const auto m = random_map(rng, 1 + trial % 3, h, w);
        for (std::size_t depth = 1; depth <= 4; ++depth) {
            REQUIRE(max_abs_diff(decode(encode(m, depth)), m) < 1e-6);
        }
    }
}

TEST_CASE("decode is linear") {
    std::mt19937_64 rng(53);
    const auto a = encode(random_map(rng, 2, 9, 12), 2);
    const auto b = encode(random_map(rng, 2, 9, 12), 2);

    Pyramid zero = a;
    for (auto& level : zero.levels)
        for (auto& v : level.data()) v = 0.0;
    const auto dz = decode(zero);
    for (double v : dz.data()) CHECK(v == 0.0);

    Pyramid scaled = a;
    Pyramid summed = a;
    for (std::size_t k = 0; k < a.levels.size(); ++k) {
        for (std::size_t i = 0; i < a.levels[k].size(); ++i) {
            scaled.levels[k].data()[i] *= -2.5;
            summed.levels[k].data()[i] += b.levels[k].data()[i];
        }
    }
    const auto da = decode(a);
    const auto db = decode(b);
    const auto ds = decode(scaled);
    const auto dsum = decode(summed);
    for (std::size_t i = 0; i < da.size(); ++i) {
        CHECK(ds.data()[i] == doctest::Approx(-2.5 * da.data()[i]).epsilon(1e-9));
        CHECK(std::abs(dsum.data()[i] - (da.data()[i] + db.data()[i])) < 1e-9);
    }
}

TEST_CASE("encode is linear") {
    std::mt19937_64 rng(54);
    const auto x = random_map(rng, 2, 10, 10);
    const auto y = random_map(rng, 2, 10, 10);
    FeatureMap sum = x;
    for (std::size_t i = 0; i < sum.size(); ++i) sum.data()[i] = 3.0 * x.data()[i] + y.data()[i];
    const auto px = encode(x, 3), py = encode(y, 3), ps = encode(sum, 3);
    for (std::size_t k = 0; k < ps.levels.size(); ++k)
        for (std::size_t i = 0; i < ps.levels[k].size(); ++i)
            REQUIRE(std::abs(ps.levels[k].data()[i] -
                             (3.0 * px.levels[k].data()[i] + py.levels[k].data()[i])) < 1e-9);
}

TEST_CASE("decode rejects inconsistent levels") {
    Pyramid p{{FeatureMap(1, 8, 8), FeatureMap(1, 3, 4)}};
    CHECK_THROWS_AS(decode(p), ShapeError);
    Pyramid q{{FeatureMap(1, 8, 8), FeatureMap(2, 4, 4)}};
    CHECK_THROWS_AS(decode(q), ShapeError);
    CHECK_THROWS_AS(decode(Pyramid{}), ShapeError);
}

TEST_CASE("transform_in_pyramid pass-through methods") {
    std::mt19937_64 rng(55);
    const auto content = random_map(rng, 3, 20, 18, 0, 1);
    const auto style = random_map(rng, 3, 20, 18, 0, 1);
    CHECK(max_abs_diff(transform_in_pyramid(content, style, Identity{}, 3), content) < 1e-6);
    CHECK(max_abs_diff(transform_in_pyramid(content, style, NoShuffle{}, 3), style) < 1e-6);

    const auto other = random_map(rng, 3, 12, 30, 0, 1);
    const auto ns = transform_in_pyramid(content, other, NoShuffle{}, 2);
    CHECK(ns.height() == 12);
    CHECK(max_abs_diff(ns, other) < 1e-6);
}

TEST_CASE("transform_in_pyramid with style projection") {
    std::mt19937_64 rng(56);
    const auto content = random_map(rng, 3, 24, 24, 0, 1);
    const auto style = random_map(rng, 3, 16, 28, 0, 1);
    const auto result = transform_in_pyramid_detailed(content, style, StyleProjection{}, {3, true});
    CHECK(result.image.same_shape(content));
    for (std::size_t k = 0; k < result.fused.levels.size(); ++k) {
        CHECK(result.fused.levels[k].same_shape(result.content.levels[k]));
        for (double rho : rank_correlation(result.content.levels[k], result.fused.levels[k]))
            CHECK(rho == 1.0);
    }

    const auto no_residual =
        transform_in_pyramid_detailed(content, style, StyleProjection{}, {3, false});
    CHECK(no_residual.fused.residual() == no_residual.content.residual());
}
