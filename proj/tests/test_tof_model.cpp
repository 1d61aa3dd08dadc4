#include <catch2/catch_amalgamated.hpp>

#include <numbers>

#include "tofcs/phantom.hpp"
#include "tofcs/tof_model.hpp"

using namespace tofcs;

namespace {

constexpr double pi = std::numbers::pi;

/// Random scene with depth inside the unambiguous range and positive
/// amplitude.
Scene random_scene(std::uint64_t seed, std::size_t n1 = 6, std::size_t n2 = 8) {
    Rng rng(seed);
    Scene scene;
    scene.depth = Image(n1, n2);
    scene.amplitude = Image(n1, n2);
    scene.offset = Image(n1, n2);
    const double d_max = max_depth(scene.omega);
    for (std::size_t i = 0; i < scene.depth.size(); ++i) {
        scene.depth[i] = rng.uniform() * 0.98 * d_max;
        scene.amplitude[i] = 0.1 + rng.uniform();
        scene.offset[i] = rng.gaussian();
    }
    return scene;
}

} // namespace

TEST_CASE("depth_to_phase", "[tof]") {
    const double omega = pi * 1e8;
    SECTION("zero depth is zero phase") { REQUIRE(depth_to_phase(0.0, omega) == 0.0); }
    SECTION("half range maps to pi") {
        const double d = pi * speed_of_light / (2.0 * omega);
        REQUIRE(depth_to_phase(d, omega) == Catch::Approx(pi).epsilon(1e-14));
    }
    SECTION("beyond the range wraps around") {
        // 4.5 m exceeds d_max ~ 2.998 m and aliases
        const double phi = depth_to_phase(4.5, omega);
        const double expected = std::fmod(2.0 * omega * 4.5 / speed_of_light, 2.0 * pi);
        REQUIRE(phi == Catch::Approx(expected).epsilon(1e-14));
        REQUIRE(phi == Catch::Approx(3.1481).margin(5e-4));
    }
    SECTION("negative depth rejected") {
        REQUIRE_THROWS_AS(depth_to_phase(-0.1, omega), ConfigError);
    }
}

TEST_CASE("simulate_phase_images", "[tof]") {
    SECTION("phi = 0 gives (1, 0, -1, 0) for AC = 2, K = 0") {
        Scene scene;
        scene.depth = Image(1, 1, 0.0);
        scene.amplitude = Image(1, 1, 2.0);
        scene.offset = Image(1, 1, 0.0);
        scene.emitted_amplitude = 1.0;
        const PhaseImageSet p = simulate_phase_images(scene);
        REQUIRE(p.p1[0] == Catch::Approx(1.0));
        REQUIRE(p.p2[0] == Catch::Approx(0.0).margin(1e-15));
        REQUIRE(p.p3[0] == Catch::Approx(-1.0));
        REQUIRE(p.p4[0] == Catch::Approx(0.0).margin(1e-15));
    }
    SECTION("phi = pi/2 gives (5, 4, 5, 6) for AC = 2, K = 5") {
        Scene scene;
        scene.omega = pi * 1e8;
        scene.depth = Image(1, 1, 0.25 * pi * speed_of_light / scene.omega); // phi = pi/2
        scene.amplitude = Image(1, 1, 2.0);
        scene.offset = Image(1, 1, 5.0);
        const PhaseImageSet p = simulate_phase_images(scene);
        REQUIRE(p.p1[0] == Catch::Approx(5.0).margin(1e-12));
        REQUIRE(p.p2[0] == Catch::Approx(4.0).margin(1e-12));
        REQUIRE(p.p3[0] == Catch::Approx(5.0).margin(1e-12));
        REQUIRE(p.p4[0] == Catch::Approx(6.0).margin(1e-12));
    }
    SECTION("matches the pointwise formulas on a seeded scene") {
        const Scene scene = random_scene(5);
        const PhaseImageSet p = simulate_phase_images(scene);
        for (std::size_t i = 0; i < scene.depth.size(); ++i) {
            const double phi = depth_to_phase(scene.depth[i], scene.omega);
            const double half = 0.5 * scene.amplitude[i] * scene.emitted_amplitude;
            REQUIRE(p.p1[i] == Catch::Approx(half * std::cos(phi) + scene.offset[i]).margin(1e-12));
            REQUIRE(p.p2[i] == Catch::Approx(-half * std::sin(phi) + scene.offset[i]).margin(1e-12));
            REQUIRE(p.p3[i] == Catch::Approx(-half * std::cos(phi) + scene.offset[i]).margin(1e-12));
            REQUIRE(p.p4[i] == Catch::Approx(half * std::sin(phi) + scene.offset[i]).margin(1e-12));
        }
    }
    SECTION("p1 + p3 = p2 + p4 = 2K in the noiseless model") {
        const Scene scene = random_scene(17);
        const PhaseImageSet p = simulate_phase_images(scene);
        for (std::size_t i = 0; i < scene.depth.size(); ++i) {
            REQUIRE(p.p1[i] + p.p3[i] == Catch::Approx(2.0 * scene.offset[i]).margin(1e-12));
            REQUIRE(p.p2[i] + p.p4[i] == Catch::Approx(2.0 * scene.offset[i]).margin(1e-12));
        }
    }
    SECTION("negative amplitude rejected") {
        Scene scene = random_scene(3);
        scene.amplitude[0] = -1.0;
        REQUIRE_THROWS_AS(simulate_phase_images(scene), ConfigError);
    }
}

TEST_CASE("add_noise", "[tof]") {
    const PhaseImageSet clean = simulate_phase_images(random_scene(8));
    SECTION("sigma = 0 is the identity") {
        const PhaseImageSet same = add_noise(clean, 0.0, 3);
        for (std::size_t i = 0; i < clean.p1.size(); ++i) REQUIRE(same.p1[i] == clean.p1[i]);
    }
    SECTION("reproducible per seed") {
        const PhaseImageSet a = add_noise(clean, 0.5, 11);
        const PhaseImageSet b = add_noise(clean, 0.5, 11);
        for (std::size_t i = 0; i < a.p1.size(); ++i) {
            REQUIRE(a.p1[i] == b.p1[i]);
            REQUIRE(a.p4[i] == b.p4[i]);
        }
    }
    SECTION("empirical std within 2% at 1e5 pixels") {
        const Scene big = random_scene(9, 250, 100);
        const PhaseImageSet base = simulate_phase_images(big);
        const PhaseImageSet noisy = add_noise(base, 0.1, 21);
        double sum = 0.0, sum2 = 0.0;
        const std::size_t n = base.p1.size();
        for (std::size_t i = 0; i < n; ++i) {
            const double d = noisy.p1[i] - base.p1[i];
            sum += d;
            sum2 += d * d;
        }
        const double mean = sum / static_cast<double>(n);
        const double std_dev = std::sqrt(sum2 / static_cast<double>(n) - mean * mean);
        REQUIRE(std::abs(std_dev - 0.1) / 0.1 < 0.02);
    }
    SECTION("negative sigma rejected") { REQUIRE_THROWS_AS(add_noise(clean, -0.1, 0), ConfigError); }
}

TEST_CASE("phase_differences", "[tof]") {
    SECTION("equal images difference to zero") {
        PhaseImageSet p;
        p.p1 = p.p2 = p.p3 = p.p4 = Image(2, 2, 1.5);
        const DifferencePair d = phase_differences(p);
        for (double v : d.u.flat()) REQUIRE(v == 0.0);
        for (double v : d.v.flat()) REQUIRE(v == 0.0);
    }
    SECTION("offset cancels: u = AC cos(phi), v = AC sin(phi)") {
        const Scene scene = random_scene(13);
        const DifferencePair d = phase_differences(simulate_phase_images(scene));
        for (std::size_t i = 0; i < scene.depth.size(); ++i) {
            const double phi = depth_to_phase(scene.depth[i], scene.omega);
            const double ac = scene.amplitude[i] * scene.emitted_amplitude;
            REQUIRE(d.u[i] == Catch::Approx(ac * std::cos(phi)).margin(1e-12));
            REQUIRE(d.v[i] == Catch::Approx(ac * std::sin(phi)).margin(1e-12));
        }
    }
    SECTION("adding any per-pixel map to the offset leaves differences unchanged") {
        Scene scene = random_scene(29);
        const DifferencePair before = phase_differences(simulate_phase_images(scene));
        Rng rng(4);
        for (std::size_t i = 0; i < scene.offset.size(); ++i) scene.offset[i] += 10.0 * rng.gaussian();
        const DifferencePair after = phase_differences(simulate_phase_images(scene));
        for (std::size_t i = 0; i < before.u.size(); ++i) {
            REQUIRE(after.u[i] == Catch::Approx(before.u[i]).margin(1e-10));
            REQUIRE(after.v[i] == Catch::Approx(before.v[i]).margin(1e-10));
        }
    }
    SECTION("u^2 + v^2 = (AC)^2 pointwise") {
        const Scene scene = random_scene(31);
        const DifferencePair d = phase_differences(simulate_phase_images(scene));
        for (std::size_t i = 0; i < scene.depth.size(); ++i) {
            const double ac = scene.amplitude[i] * scene.emitted_amplitude;
            REQUIRE(d.u[i] * d.u[i] + d.v[i] * d.v[i] == Catch::Approx(ac * ac).epsilon(1e-10));
        }
    }
}

TEST_CASE("phase_from_differences", "[tof]") {
    auto single = [](double u, double v) {
        DifferencePair pair{Image(1, 1, u), Image(1, 1, v)};
        return phase_from_differences(pair);
    };
    SECTION("(1, 0) -> 0") { REQUIRE(single(1.0, 0.0).phase[0] == 0.0); }
    SECTION("(0, 1) -> pi/2") {
        REQUIRE(single(0.0, 1.0).phase[0] == Catch::Approx(pi / 2).epsilon(1e-14));
    }
    SECTION("(-1, -1) -> 5 pi / 4") {
        REQUIRE(single(-1.0, -1.0).phase[0] == Catch::Approx(5.0 * pi / 4.0).epsilon(1e-14));
    }
    SECTION("zero amplitude flagged indeterminate with phase 0") {
        const PhaseEstimate est = single(0.0, 0.0);
        REQUIRE(est.phase[0] == 0.0);
        REQUIRE(est.indeterminate[0] == 1);
    }
    SECTION("result always lands in [0, 2 pi)") {
        for (std::uint64_t seed = 0; seed < 200; ++seed) {
            Rng rng(seed);
            const PhaseEstimate est = single(rng.gaussian() * 1e-9, rng.gaussian() * 1e-9);
            REQUIRE(est.phase[0] >= 0.0);
            REQUIRE(est.phase[0] < 2.0 * pi);
        }
    }
    SECTION("scaling the amplitude leaves the phase unchanged") {
        Scene scene = random_scene(37);
        const PhaseEstimate before =
            phase_from_differences(phase_differences(simulate_phase_images(scene)));
        for (std::size_t i = 0; i < scene.amplitude.size(); ++i) scene.amplitude[i] *= 3.7;
        const PhaseEstimate after =
            phase_from_differences(phase_differences(simulate_phase_images(scene)));
        for (std::size_t i = 0; i < before.phase.size(); ++i)
            REQUIRE(after.phase[i] == Catch::Approx(before.phase[i]).margin(1e-11));
    }
}

TEST_CASE("depth_from_phase", "[tof]") {
    const double omega = pi * 1e8;
    SECTION("zero phase, zero depth") {
        REQUIRE(depth_from_phase(Image(1, 1, 0.0), omega)[0] == 0.0);
    }
    SECTION("phi = pi gives c / (2e8)") {
        const double expected = speed_of_light / 2e8; // 1.49896229 m
        REQUIRE(depth_from_phase(Image(1, 1, pi), omega)[0] ==
                Catch::Approx(expected).epsilon(1e-14));
    }
    SECTION("phase out of range rejected") {
        REQUIRE_THROWS_AS(depth_from_phase(Image(1, 1, 2.0 * pi), omega), ConfigError);
        REQUIRE_THROWS_AS(depth_from_phase(Image(1, 1, -0.1), omega), ConfigError);
    }
}

TEST_CASE("round trip scene -> phases -> differences -> depth", "[tof]") {
    SECTION("50 seeded scenes reproduce depth to 1e-9 m") {
        for (std::uint64_t seed = 0; seed < 50; ++seed) {
            const Scene scene = random_scene(sub_seed(seed, "roundtrip"));
            const PhaseEstimate est =
                phase_from_differences(phase_differences(simulate_phase_images(scene)));
            const Image depth = depth_from_phase(est.phase, scene.omega);
            for (std::size_t i = 0; i < depth.size(); ++i) {
                REQUIRE(est.indeterminate[i] == 0);
                REQUIRE(depth[i] == Catch::Approx(scene.depth[i]).margin(1e-9));
            }
        }
    }
    SECTION("distances beyond d_max wrap to d mod d_max") {
        Scene scene = random_scene(123);
        const double d_max = max_depth(scene.omega);
        for (std::size_t i = 0; i < scene.depth.size(); ++i)
            scene.depth[i] = d_max * (1.0 + 1.5 * (static_cast<double>(i) + 1.0) /
                                                 static_cast<double>(scene.depth.size()));
        const PhaseEstimate est =
            phase_from_differences(phase_differences(simulate_phase_images(scene)));
        const Image depth = depth_from_phase(est.phase, scene.omega);
        for (std::size_t i = 0; i < depth.size(); ++i) {
            const double wrapped = std::fmod(scene.depth[i], d_max);
            REQUIRE(depth[i] == Catch::Approx(wrapped).margin(1e-8));
        }
    }
    SECTION("reference subtraction does not disturb the round trip") {
        const Scene scene = random_scene(55);
        const PhaseImageSet calibrated = subtract_reference(simulate_phase_images(scene), 0.7);
        const PhaseEstimate est = phase_from_differences(phase_differences(calibrated));
        const Image depth = depth_from_phase(est.phase, scene.omega);
        for (std::size_t i = 0; i < depth.size(); ++i)
            REQUIRE(depth[i] == Catch::Approx(scene.depth[i]).margin(1e-9));
    }
}

TEST_CASE("phantoms", "[tof]") {
    SECTION("books phantom stays under 1.2 m with positive amplitude") {
        for (std::uint64_t seed = 0; seed < 5; ++seed) {
            const Scene scene = make_phantom(PhantomKind::books, 56, 56, seed);
            for (std::size_t i = 0; i < scene.depth.size(); ++i) {
                REQUIRE(scene.depth[i] >= 0.0);
                REQUIRE(scene.depth[i] <= 1.2);
                REQUIRE(scene.amplitude[i] > 0.0);
            }
        }
    }
    SECTION("phantoms are deterministic per seed") {
        for (PhantomKind kind : {PhantomKind::books, PhantomKind::planes, PhantomKind::disks}) {
            const Scene a = make_phantom(kind, 28, 28, 9);
            const Scene b = make_phantom(kind, 28, 28, 9);
            for (std::size_t i = 0; i < a.depth.size(); ++i) {
                REQUIRE(a.depth[i] == b.depth[i]);
                REQUIRE(a.amplitude[i] == b.amplitude[i]);
            }
        }
    }
    SECTION("depths stay inside the unambiguous range") {
        for (PhantomKind kind : {PhantomKind::books, PhantomKind::planes, PhantomKind::disks}) {
            const Scene scene = make_phantom(kind, 42, 30, 31);
            const double d_max = max_depth(scene.omega);
            for (double d : scene.depth.flat()) {
                REQUIRE(d >= 0.0);
                REQUIRE(d < d_max);
            }
        }
    }
    SECTION("unknown kind rejected") {
        REQUIRE_THROWS_AS(parse_phantom_kind("television"), ConfigError);
    }
}
