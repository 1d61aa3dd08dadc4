#include <catch2/catch_amalgamated.hpp>

#include "tofcs/transforms.hpp"

#include "oracles.hpp"

using namespace tofcs;

namespace {

Image random_image(std::uint64_t seed, std::size_t rows, std::size_t cols) {
    Rng rng(seed);
    Image img(rows, cols);
    for (std::size_t i = 0; i < img.size(); ++i) img[i] = rng.gaussian();
    return img;
}

} // namespace

TEST_CASE("haar forward", "[transforms]") {
    SECTION("constant image concentrates in one coefficient") {
        const std::size_t b = 8;
        const double value = 2.5;
        const HaarPlan plan(b, 3); // maximal depth for b = 8
        const Image coeffs = haar_forward(plan, Image(b, b, value));
        REQUIRE(coeffs.at(0, 0) == Catch::Approx(value * b).epsilon(1e-13));
        for (std::size_t i = 0; i < coeffs.size(); ++i) {
            if (i != 0) REQUIRE(coeffs[i] == Catch::Approx(0.0).margin(1e-12));
        }
    }
    SECTION("zero maps to zero") {
        const HaarPlan plan(4, 2);
        const Image coeffs = haar_forward(plan, Image(4, 4));
        for (double c : coeffs.flat()) REQUIRE(c == 0.0);
    }
    SECTION("matches the dense filter-bank matrix on a 4x4 tiling") {
        // x = [[1,2],[3,4]] tiled to 4x4, one level
        Image x(4, 4);
        for (std::size_t i = 0; i < 4; ++i)
            for (std::size_t j = 0; j < 4; ++j) x.at(i, j) = 1.0 + (j % 2) + 2.0 * (i % 2);
        const HaarPlan plan(4, 1);
        const Image coeffs = haar_forward(plan, x);
        const oracles::Dense analysis = oracles::haar_analysis_matrix(4, 4, 1);
        const auto expected = oracles::matvec(analysis, x.flat());
        for (std::size_t i = 0; i < 16; ++i)
            REQUIRE(coeffs[i] == Catch::Approx(expected[i]).margin(1e-13));
    }
    SECTION("dense equivalence across shapes up to b = 32") {
        const std::size_t sides[] = {2, 4, 8, 12, 16, 28, 32};
        for (std::size_t b : sides) {
            const HaarPlan plan = make_haar_plan(b, b);
            const Image x = random_image(40 + b, b, b);
            const Image coeffs = haar_forward(plan, x);
            const auto dense = oracles::haar_analysis_matrix(b, b, plan.levels);
            const auto expected = oracles::matvec(dense, x.flat());
            for (std::size_t i = 0; i < x.size(); ++i)
                REQUIRE(coeffs[i] == Catch::Approx(expected[i]).margin(1e-11));
        }
    }
    SECTION("orthonormality preserves the norm") {
        for (std::uint64_t seed = 0; seed < 20; ++seed) {
            const Image x = random_image(seed, 16, 16);
            const Image coeffs = haar_forward(make_haar_plan(16, 16), x);
            REQUIRE(norm2(coeffs.flat()) ==
                    Catch::Approx(norm2(x.flat())).epsilon(1e-12));
        }
    }
    SECTION("rejects bad shapes") {
        REQUIRE_THROWS_AS(HaarPlan(6, 2), ConfigError); // 6 not divisible by 4
        const HaarPlan plan(4, 1);
        Image wrong(2, 2);
        Image out(4, 4);
        REQUIRE_THROWS_AS(haar_forward(plan, wrong.flat(), out.flat()), DimensionError);
    }
}

TEST_CASE("haar inverse", "[transforms]") {
    SECTION("zero coefficients give the zero image") {
        const Image img = haar_inverse(HaarPlan(4, 2), Image(4, 4));
        for (double v : img.flat()) REQUIRE(v == 0.0);
    }
    SECTION("single coarse coefficient gives a constant image") {
        const HaarPlan plan(8, 3);
        Image coeffs(8, 8);
        coeffs.at(0, 0) = 8.0;
        const Image img = haar_inverse(plan, coeffs);
        for (double v : img.flat()) REQUIRE(v == Catch::Approx(1.0).epsilon(1e-13));
    }
    SECTION("round trip is the identity") {
        for (std::uint64_t seed = 0; seed < 10; ++seed) {
            const Image x = random_image(seed + 7, 28, 28);
            const HaarPlan plan = make_haar_plan(28, 28);
            REQUIRE(plan.levels == 2); // 28 = 4 * 7
            const Image back = haar_inverse(plan, haar_forward(plan, x));
            for (std::size_t i = 0; i < x.size(); ++i)
                REQUIRE(back[i] == Catch::Approx(x[i]).margin(1e-12 * (1.0 + std::abs(x[i]))));
        }
    }
    SECTION("linearity") {
        const HaarPlan plan(8, 2);
        const Image x = random_image(1, 8, 8), y = random_image(2, 8, 8);
        const Image sum = haar_forward(plan, x + y);
        const Image split = haar_forward(plan, x) + haar_forward(plan, y);
        for (std::size_t i = 0; i < sum.size(); ++i)
            REQUIRE(sum[i] == Catch::Approx(split[i]).margin(1e-12));
    }
}

TEST_CASE("gradient", "[transforms]") {
    SECTION("constant image has zero gradient") {
        const GradientField g = gradient(Image(5, 7, 3.3));
        for (double v : g.gx.flat()) REQUIRE(v == 0.0);
        for (double v : g.gy.flat()) REQUIRE(v == 0.0);
    }
    SECTION("column ramp") {
        Image x(3, 4);
        for (std::size_t i = 0; i < 3; ++i)
            for (std::size_t j = 0; j < 4; ++j) x.at(i, j) = static_cast<double>(j);
        const GradientField g = gradient(x);
        for (std::size_t i = 0; i < 3; ++i) {
            for (std::size_t j = 0; j < 4; ++j) {
                REQUIRE(g.gx.at(i, j) == (j + 1 < 4 ? 1.0 : 0.0));
                REQUIRE(g.gy.at(i, j) == 0.0);
            }
        }
    }
    SECTION("matches the dense difference matrix") {
        const Image x = random_image(12, 5, 6);
        const GradientField g = gradient(x);
        const auto expected = oracles::matvec(oracles::gradient_matrix(5, 6), x.flat());
        for (std::size_t i = 0; i < x.size(); ++i) {
            REQUIRE(g.gx[i] == Catch::Approx(expected[i]).margin(1e-14));
            REQUIRE(g.gy[i] == Catch::Approx(expected[x.size() + i]).margin(1e-14));
        }
    }
}

TEST_CASE("divergence", "[transforms]") {
    SECTION("zero field") {
        const GradientField g{Image(4, 4), Image(4, 4)};
        const Image div = divergence(g);
        for (double v : div.flat()) REQUIRE(v == 0.0);
    }
    SECTION("adjoint identity over 500 seeded pairs") {
        for (std::uint64_t seed = 0; seed < 500; ++seed) {
            Rng rng(seed);
            const std::size_t n1 = 1 + rng.uniform_below(6);
            const std::size_t n2 = 1 + rng.uniform_below(6);
            const Image x = random_image(sub_seed(seed, "x"), n1, n2);
            const GradientField g{random_image(sub_seed(seed, "gx"), n1, n2),
                                  random_image(sub_seed(seed, "gy"), n1, n2)};
            const GradientField dx = gradient(x);
            const double lhs = dot(dx.gx.flat(), g.gx.flat()) + dot(dx.gy.flat(), g.gy.flat());
            const double rhs = -dot(x.flat(), divergence(g).flat());
            const double scale = norm2(x.flat()) *
                                 (norm2(g.gx.flat()) + norm2(g.gy.flat())) + 1e-30;
            REQUIRE(std::abs(lhs - rhs) <= 1e-10 * scale);
        }
    }
    SECTION("1x3 chain equals -D^T g") {
        // D^T [1,0,0] = [-1,1,0]; divergence is its negative
        GradientField g{Image(1, 3), Image(1, 3)};
        g.gx.at(0, 0) = 1.0;
        const Image div = divergence(g);
        REQUIRE(div.at(0, 0) == 1.0);
        REQUIRE(div.at(0, 1) == -1.0);
        REQUIRE(div.at(0, 2) == 0.0);
        const auto dt = oracles::matvec_t(oracles::gradient_matrix(1, 3),
                                          std::vector<double>{1, 0, 0, 0, 0, 0});
        for (std::size_t i = 0; i < 3; ++i) REQUIRE(div[i] == -dt[i]);
    }
    SECTION("field shape mismatch") {
        const GradientField g{Image(2, 2), Image(3, 3)};
        REQUIRE_THROWS_AS(divergence(g), DimensionError);
    }
}

TEST_CASE("tv seminorm", "[transforms]") {
    SECTION("zero exactly on constants") {
        REQUIRE(tv_seminorm(Image(6, 6, 42.0)) == 0.0);
    }
    SECTION("positive otherwise") {
        Image x(4, 4, 1.0);
        x.at(2, 2) = 2.0;
        REQUIRE(tv_seminorm(x) > 0.0);
    }
}
