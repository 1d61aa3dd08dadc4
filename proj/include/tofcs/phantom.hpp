#ifndef TOFCS_PHANTOM_HPP
#define TOFCS_PHANTOM_HPP

#include <algorithm>
#include <cstdint>
#include <string>

#include "tofcs/errors.hpp"
#include "tofcs/random.hpp"
#include "tofcs/tof_model.hpp"

namespace tofcs {

enum class PhantomKind { books, planes, disks };

inline PhantomKind parse_phantom_kind(const std::string& name) {
    if (name == "books") return PhantomKind::books;
    if (name == "planes") return PhantomKind::planes;
    if (name == "disks") return PhantomKind::disks;
    throw ConfigError("unknown phantom kind: " + name);
}

inline std::string phantom_kind_name(PhantomKind kind) {
    switch (kind) {
        case PhantomKind::books: return "books";
        case PhantomKind::planes: return "planes";
        case PhantomKind::disks: return "disks";
    }
    return "?";
}

namespace detail {

inline double uniform_in(Rng& rng, double lo, double hi) { return lo + (hi - lo) * rng.uniform(); }

/// Desk scenery: piecewise-constant depth, a back wall with upright books
/// of varying width, height and distance. Everything stays under 1.2 m.
inline Scene books_phantom(std::size_t n1, std::size_t n2, std::uint64_t seed) {
    Rng rng(sub_seed(seed, "phantom.books"));
    Scene scene;
    const double wall = uniform_in(rng, 1.05, 1.18);
    scene.depth = Image(n1, n2, wall);
    scene.amplitude = Image(n1, n2, uniform_in(rng, 0.25, 0.45));
    scene.offset = Image(n1, n2, uniform_in(rng, 0.05, 0.3));

    const std::size_t count = 4 + rng.uniform_below(5); // 4..8 books
    const std::size_t shelf = n1 - 1 - rng.uniform_below(std::max<std::size_t>(n1 / 10, 1));
    std::size_t col = rng.uniform_below(std::max<std::size_t>(n2 / 8, 1));
    for (std::size_t b = 0; b < count && col + 4 < n2; ++b) {
        const std::size_t width = 4 + rng.uniform_below(std::max<std::size_t>(n2 / 5, 1));
        const std::size_t height = n1 / 3 + rng.uniform_below(std::max<std::size_t>(n1 / 2, 1));
        const std::size_t top = shelf > height ? shelf - height : 0;
        const double depth = uniform_in(rng, 0.35, 0.95);
        const double albedo = uniform_in(rng, 0.5, 1.0);
        for (std::size_t i = top; i <= shelf && i < n1; ++i) {
            for (std::size_t j = col; j < std::min(col + width, n2); ++j) {
                scene.depth.at(i, j) = depth;
                scene.amplitude.at(i, j) = albedo;
            }
        }
        col += width + rng.uniform_below(std::max<std::size_t>(n2 / 10, 1));
    }
    // a desk plane in front of the shelf
    const double desk = uniform_in(rng, 0.3, 0.6);
    for (std::size_t i = shelf + 1; i < n1; ++i) {
        for (std::size_t j = 0; j < n2; ++j) {
            scene.depth.at(i, j) = desk;
            scene.amplitude.at(i, j) = 0.8;
        }
    }
    return scene;
}

/// Two slanted planes split at a random column.
inline Scene planes_phantom(std::size_t n1, std::size_t n2, std::uint64_t seed) {
    Rng rng(sub_seed(seed, "phantom.planes"));
    Scene scene;
    scene.depth = Image(n1, n2);
    scene.amplitude = Image(n1, n2);
    scene.offset = Image(n1, n2, uniform_in(rng, 0.05, 0.3));
    const std::size_t split = n2 / 3 + rng.uniform_below(std::max<std::size_t>(n2 / 3, 1));
    const double d_max = max_depth(scene.omega);
    for (int side = 0; side < 2; ++side) {
        const double base = uniform_in(rng, 0.4, 1.6);
        const double slope_j = uniform_in(rng, -0.8, 0.8) / static_cast<double>(n2);
        const double slope_i = uniform_in(rng, -0.8, 0.8) / static_cast<double>(n1);
        const double albedo = uniform_in(rng, 0.4, 1.0);
        const std::size_t j0 = side == 0 ? 0 : split;
        const std::size_t j1 = side == 0 ? split : n2;
        for (std::size_t i = 0; i < n1; ++i) {
            for (std::size_t j = j0; j < j1; ++j) {
                const double d = base + slope_j * static_cast<double>(j) +
                                 slope_i * static_cast<double>(i);
                scene.depth.at(i, j) = std::clamp(d, 0.1, 0.95 * d_max);
                scene.amplitude.at(i, j) = albedo;
            }
        }
    }
    return scene;
}

/// Flat background with a handful of disks at different distances.
inline Scene disks_phantom(std::size_t n1, std::size_t n2, std::uint64_t seed) {
    Rng rng(sub_seed(seed, "phantom.disks"));
    Scene scene;
    scene.depth = Image(n1, n2, uniform_in(rng, 1.4, 2.0));
    scene.amplitude = Image(n1, n2, uniform_in(rng, 0.2, 0.4));
    scene.offset = Image(n1, n2, uniform_in(rng, 0.05, 0.3));
    const std::size_t count = 4 + rng.uniform_below(5);
    for (std::size_t d = 0; d < count; ++d) {
        const double ci = static_cast<double>(rng.uniform_below(n1));
        const double cj = static_cast<double>(rng.uniform_below(n2));
        const double radius = uniform_in(rng, 0.05, 0.2) * static_cast<double>(std::min(n1, n2));
        const double depth = uniform_in(rng, 0.3, 1.2);
        const double albedo = uniform_in(rng, 0.5, 1.0);
        for (std::size_t i = 0; i < n1; ++i) {
            for (std::size_t j = 0; j < n2; ++j) {
                const double di = static_cast<double>(i) - ci;
                const double dj = static_cast<double>(j) - cj;
                if (di * di + dj * dj <= radius * radius) {
                    scene.depth.at(i, j) = depth;
                    scene.amplitude.at(i, j) = albedo;
                }
            }
        }
    }
    return scene;
}

} // namespace detail

/// Seeded synthetic scene of the requested kind.
inline Scene make_phantom(PhantomKind kind, std::size_t n1, std::size_t n2, std::uint64_t seed) {
    if (n1 == 0 || n2 == 0) throw ConfigError("phantom: image dimensions must be positive");
    switch (kind) {
        case PhantomKind::books: return detail::books_phantom(n1, n2, seed);
        case PhantomKind::planes: return detail::planes_phantom(n1, n2, seed);
        case PhantomKind::disks: return detail::disks_phantom(n1, n2, seed);
    }
    throw ConfigError("phantom: unknown kind");
}

} // namespace tofcs

#endif
