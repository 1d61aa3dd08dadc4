#ifndef TOFCS_TRANSFORMS_HPP
#define TOFCS_TRANSFORMS_HPP

#include <cmath>
#include <cstddef>
#include <numbers>
#include <span>
#include <vector>

#include "tofcs/errors.hpp"
#include "tofcs/image.hpp"

namespace tofcs {

/// Multi-level orthonormal 2D Haar decomposition plan. levels = 0 is the
/// identity (used for degenerate border tiles whose dimensions admit no
/// halving step).
struct HaarPlan {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::size_t levels = 0;

    HaarPlan() = default;
    HaarPlan(std::size_t rows_, std::size_t cols_, std::size_t levels_)
        : rows(rows_), cols(cols_), levels(levels_) {
        if (rows == 0 || cols == 0) throw ConfigError("haar: empty plan");
        const std::size_t div = std::size_t{1} << levels;
        if (rows % div != 0 || cols % div != 0)
            throw ConfigError("haar: dimensions not divisible by 2^levels");
    }

    /// Square plan of side b.
    HaarPlan(std::size_t b, std::size_t levels_) : HaarPlan(b, b, levels_) {}
};

/// Deepest level such that 2^L divides both dimensions.
inline std::size_t max_haar_levels(std::size_t rows, std::size_t cols) {
    std::size_t levels = 0;
    while (rows % 2 == 0 && cols % 2 == 0 && rows > 1 && cols > 1) {
        rows /= 2;
        cols /= 2;
        ++levels;
    }
    return levels;
}

/// Plan with the maximal feasible depth for the given shape.
inline HaarPlan make_haar_plan(std::size_t rows, std::size_t cols) {
    return HaarPlan(rows, cols, max_haar_levels(rows, cols));
}

namespace detail {

// One orthonormal Haar analysis step along a length-2h strided slice:
// approx coefficients land in [0, h), details in [h, 2h).
inline void haar_step_analysis(double* data, std::size_t h, std::size_t stride,
                               std::vector<double>& tmp) {
    constexpr double inv_sqrt2 = std::numbers::sqrt2 / 2.0;
    tmp.resize(2 * h);
    for (std::size_t i = 0; i < h; ++i) {
        const double a = data[2 * i * stride];
        const double b = data[(2 * i + 1) * stride];
        tmp[i] = (a + b) * inv_sqrt2;
        tmp[h + i] = (a - b) * inv_sqrt2;
    }
    for (std::size_t i = 0; i < 2 * h; ++i) data[i * stride] = tmp[i];
}

inline void haar_step_synthesis(double* data, std::size_t h, std::size_t stride,
                                std::vector<double>& tmp) {
    constexpr double inv_sqrt2 = std::numbers::sqrt2 / 2.0;
    tmp.resize(2 * h);
    for (std::size_t i = 0; i < h; ++i) {
        const double a = data[i * stride];
        const double d = data[(h + i) * stride];
        tmp[2 * i] = (a + d) * inv_sqrt2;
        tmp[2 * i + 1] = (a - d) * inv_sqrt2;
    }
    for (std::size_t i = 0; i < 2 * h; ++i) data[i * stride] = tmp[i];
}

} // namespace detail

/// Analysis: image -> coefficient array (subbands packed in place, coarse
/// approximation in the top-left corner). Orthonormal, so norms are kept.
inline void haar_forward(const HaarPlan& plan, std::span<const double> x, std::span<double> coeffs) {
    const std::size_t n = plan.rows * plan.cols;
    if (x.size() != n || coeffs.size() != n) throw DimensionError("haar_forward: size mismatch");
    std::copy(x.begin(), x.end(), coeffs.begin());
    std::vector<double> tmp;
    std::size_t h = plan.rows, w = plan.cols;
    for (std::size_t level = 0; level < plan.levels; ++level) {
        for (std::size_t i = 0; i < h; ++i)
            detail::haar_step_analysis(coeffs.data() + i * plan.cols, w / 2, 1, tmp);
        for (std::size_t j = 0; j < w; ++j)
            detail::haar_step_analysis(coeffs.data() + j, h / 2, plan.cols, tmp);
        h /= 2;
        w /= 2;
    }
}

/// Synthesis: coefficient array -> image; exact inverse of haar_forward.
inline void haar_inverse(const HaarPlan& plan, std::span<const double> coeffs, std::span<double> x) {
    const std::size_t n = plan.rows * plan.cols;
    if (coeffs.size() != n || x.size() != n) throw DimensionError("haar_inverse: size mismatch");
    std::copy(coeffs.begin(), coeffs.end(), x.begin());
    std::vector<double> tmp;
    for (std::size_t level = plan.levels; level > 0; --level) {
        const std::size_t h = plan.rows >> (level - 1);
        const std::size_t w = plan.cols >> (level - 1);
        for (std::size_t j = 0; j < w; ++j)
            detail::haar_step_synthesis(x.data() + j, h / 2, plan.cols, tmp);
        for (std::size_t i = 0; i < h; ++i)
            detail::haar_step_synthesis(x.data() + i * plan.cols, w / 2, 1, tmp);
    }
}

inline Image haar_forward(const HaarPlan& plan, const Image& x) {
    Image out(x.rows(), x.cols());
    haar_forward(plan, x.flat(), out.flat());
    return out;
}

inline Image haar_inverse(const HaarPlan& plan, const Image& coeffs) {
    Image out(coeffs.rows(), coeffs.cols());
    haar_inverse(plan, coeffs.flat(), out.flat());
    return out;
}

/// Forward-difference gradient with zero last difference (Neumann edge).
struct GradientField {
    Image gx, gy;
};

inline GradientField gradient(const Image& x) {
    const std::size_t n1 = x.rows(), n2 = x.cols();
    GradientField g{Image(n1, n2), Image(n1, n2)};
    for (std::size_t i = 0; i < n1; ++i) {
        for (std::size_t j = 0; j < n2; ++j) {
            g.gx.at(i, j) = (j + 1 < n2) ? x.at(i, j + 1) - x.at(i, j) : 0.0;
            g.gy.at(i, j) = (i + 1 < n1) ? x.at(i + 1, j) - x.at(i, j) : 0.0;
        }
    }
    return g;
}

/// Negative adjoint of the gradient: <gradient(x), g> = -<x, divergence(g)>.
inline Image divergence(const GradientField& g) {
    if (!g.gx.same_shape(g.gy)) throw DimensionError("divergence: field shape mismatch");
    const std::size_t n1 = g.gx.rows(), n2 = g.gx.cols();
    Image out(n1, n2);
    for (std::size_t i = 0; i < n1; ++i) {
        for (std::size_t j = 0; j < n2; ++j) {
            double d = 0.0;
            if (j + 1 < n2) d += g.gx.at(i, j);
            if (j > 0) d -= g.gx.at(i, j - 1);
            if (i + 1 < n1) d += g.gy.at(i, j);
            if (i > 0) d -= g.gy.at(i - 1, j);
            out.at(i, j) = d;
        }
    }
    return out;
}

/// Anisotropic TV seminorm sum(|gx| + |gy|); zero exactly for constants.
inline double tv_seminorm(const Image& x) {
    const GradientField g = gradient(x);
    double s = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) s += std::abs(g.gx[i]) + std::abs(g.gy[i]);
    return s;
}

} // namespace tofcs

#endif
