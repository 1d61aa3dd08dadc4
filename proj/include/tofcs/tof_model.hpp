#ifndef TOFCS_TOF_MODEL_HPP
#define TOFCS_TOF_MODEL_HPP

#include <cmath>
#include <cstdint>
#include <numbers>
#include <vector>

#include "tofcs/errors.hpp"
#include "tofcs/image.hpp"
#include "tofcs/random.hpp"

namespace tofcs {

inline constexpr double speed_of_light = 299792458.0; // m/s

/// Default modulation frequency: pi * 1e8 rad/s, unambiguous range ~3 m.
inline constexpr double default_omega = std::numbers::pi * 1e8;

/// Ground-truth scene fed to the forward simulation.
struct Scene {
    Image depth;              // meters
    Image amplitude;          // reflectivity, >= 0
    Image offset;             // ambient / noise constant per pixel
    double emitted_amplitude = 1.0;
    double omega = default_omega; // rad/s

    std::size_t rows() const { return depth.rows(); }
    std::size_t cols() const { return depth.cols(); }
};

inline void validate_scene(const Scene& scene) {
    if (!scene.depth.same_shape(scene.amplitude) || !scene.depth.same_shape(scene.offset))
        throw DimensionError("scene: depth, amplitude, offset must share dimensions");
    if (!(scene.omega > 0.0)) throw ConfigError("scene: omega must be positive");
    if (!(scene.emitted_amplitude > 0.0)) throw ConfigError("scene: emitted amplitude must be positive");
    for (double a : scene.amplitude.flat()) {
        if (a < 0.0) throw ConfigError("scene: amplitude must be nonnegative");
    }
}

/// The four sampled correlation images.
struct PhaseImageSet {
    Image p1, p2, p3, p4;
};

/// u = p1 - p3, v = p4 - p2; the pixel offset cancels in both.
struct DifferencePair {
    Image u, v;
};

/// Maximal unambiguous distance pi * c / omega.
inline double max_depth(double omega) { return std::numbers::pi * speed_of_light / omega; }

/// Phase shift of a target at distance d: (2 omega d / c) mod 2 pi.
inline double depth_to_phase(double d, double omega) {
    if (d < 0.0) throw ConfigError("depth_to_phase: negative depth");
    constexpr double two_pi = 2.0 * std::numbers::pi;
    double phi = std::fmod(2.0 * omega * d / speed_of_light, two_pi);
    if (phi >= two_pi) phi -= two_pi;
    return phi;
}

inline Image depth_to_phase(const Image& depth, double omega) {
    Image phi(depth.rows(), depth.cols());
    for (std::size_t i = 0; i < depth.size(); ++i) phi[i] = depth_to_phase(depth[i], omega);
    return phi;
}

/// Noiseless phase images:
///   p1 = (A C / 2) cos(phi) + K     p2 = -(A C / 2) sin(phi) + K
///   p3 = -(A C / 2) cos(phi) + K    p4 = (A C / 2) sin(phi) + K
inline PhaseImageSet simulate_phase_images(const Scene& scene) {
    validate_scene(scene);
    const std::size_t n1 = scene.rows(), n2 = scene.cols();
    PhaseImageSet out{Image(n1, n2), Image(n1, n2), Image(n1, n2), Image(n1, n2)};
    for (std::size_t i = 0; i < scene.depth.size(); ++i) {
        const double phi = depth_to_phase(scene.depth[i], scene.omega);
        const double half = 0.5 * scene.amplitude[i] * scene.emitted_amplitude;
        const double k = scene.offset[i];
        out.p1[i] = half * std::cos(phi) + k;
        out.p2[i] = -half * std::sin(phi) + k;
        out.p3[i] = -half * std::cos(phi) + k;
        out.p4[i] = half * std::sin(phi) + k;
    }
    return out;
}

/// Additive i.i.d. Gaussian pixel noise; sigma = 0 returns the input unchanged.
inline PhaseImageSet add_noise(const PhaseImageSet& phases, double sigma, std::uint64_t seed) {
    if (sigma < 0.0) throw ConfigError("add_noise: sigma must be nonnegative");
    if (sigma == 0.0) return phases;
    PhaseImageSet out = phases;
    Rng rng(sub_seed(seed, "phase.noise"));
    for (Image* img : {&out.p1, &out.p2, &out.p3, &out.p4}) {
        for (std::size_t i = 0; i < img->size(); ++i) (*img)[i] += sigma * rng.gaussian();
    }
    return out;
}

/// Constant-plane calibration: subtract a reference level from every phase
/// image. Differences are unaffected, only the raw images shift.
inline PhaseImageSet subtract_reference(const PhaseImageSet& phases, double reference) {
    PhaseImageSet out = phases;
    for (Image* img : {&out.p1, &out.p2, &out.p3, &out.p4}) {
        for (std::size_t i = 0; i < img->size(); ++i) (*img)[i] -= reference;
    }
    return out;
}

inline DifferencePair phase_differences(const PhaseImageSet& phases) {
    if (!phases.p1.same_shape(phases.p2) || !phases.p1.same_shape(phases.p3) ||
        !phases.p1.same_shape(phases.p4))
        throw DimensionError("phase_differences: images must share dimensions");
    return DifferencePair{phases.p1 - phases.p3, phases.p4 - phases.p2};
}

/// Phase map with a mask of pixels where u = v = 0 (argument undefined,
/// reported as 0).
struct PhaseEstimate {
    Image phase;
    std::vector<std::uint8_t> indeterminate;
};

/// Pointwise argument of u + i v, mapped into [0, 2 pi).
inline PhaseEstimate phase_from_differences(const DifferencePair& pair) {
    if (!pair.u.same_shape(pair.v)) throw DimensionError("phase_from_differences: shape mismatch");
    constexpr double two_pi = 2.0 * std::numbers::pi;
    PhaseEstimate out{Image(pair.u.rows(), pair.u.cols()),
                      std::vector<std::uint8_t>(pair.u.size(), 0)};
    for (std::size_t i = 0; i < pair.u.size(); ++i) {
        const double u = pair.u[i];
        const double v = pair.v[i];
        if (u == 0.0 && v == 0.0) {
            out.phase[i] = 0.0;
            out.indeterminate[i] = 1;
            continue;
        }
        double phi = std::atan2(v, u);
        if (phi < 0.0) phi += two_pi;
        if (phi >= two_pi) phi -= two_pi; // rounding guard near the wrap
        out.phase[i] = phi;
    }
    return out;
}

/// d = phi c / (2 omega), valid for phase maps in [0, 2 pi).
inline Image depth_from_phase(const Image& phase, double omega) {
    constexpr double two_pi = 2.0 * std::numbers::pi;
    Image depth(phase.rows(), phase.cols());
    for (std::size_t i = 0; i < phase.size(); ++i) {
        if (!(phase[i] >= 0.0 && phase[i] < two_pi))
            throw ConfigError("depth_from_phase: phase outside [0, 2pi)");
        depth[i] = phase[i] * speed_of_light / (2.0 * omega);
    }
    return depth;
}

} // namespace tofcs

#endif
