#ifndef TOFCS_SENSING_HPP
#define TOFCS_SENSING_HPP

#include <algorithm>
#include <cmath>
#include <concepts>
#include <cstdint>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "tofcs/errors.hpp"
#include "tofcs/image.hpp"
#include "tofcs/random.hpp"

namespace tofcs {

/// Anything that can apply a linear map and its adjoint.
template <typename T>
concept LinearOperator = requires(const T& op, std::span<const double> in, std::span<double> out) {
    { op.rows() } -> std::convertible_to<std::size_t>;
    { op.cols() } -> std::convertible_to<std::size_t>;
    op.forward(in, out);
    op.adjoint(in, out);
};

/// Circular convolution (v * x)_j = sum_i v_{(j-i) mod w} x_i, 0-based.
inline std::vector<double> circular_convolve(std::span<const double> v, std::span<const double> x) {
    const std::size_t w = v.size();
    if (w == 0 || x.size() != w) throw DimensionError("circular_convolve: length mismatch");
    std::vector<double> out(w, 0.0);
    for (std::size_t j = 0; j < w; ++j) {
        double s = 0.0;
        for (std::size_t i = 0; i < w; ++i) {
            s += v[(j + w - i) % w] * x[i];
        }
        out[j] = s;
    }
    return out;
}

/// Seeded regeneration recipe for a block (compact serialization form).
struct BlockProvenance {
    std::uint64_t seed = 0;
    double p_zero = 0.0;
};

/// One row-segment measurement block: a row-restricted, scaled circulant
/// matrix of shape r x w built from a ternary generator.
struct CirculantBlockSpec {
    std::vector<double> generator;       // length w, entries in {-a, 0, +a}
    std::vector<std::size_t> selection;  // r distinct ascending indices < w
    double scale = 1.0;
    std::optional<BlockProvenance> provenance;

    std::size_t width() const { return generator.size(); }
    std::size_t rows() const { return selection.size(); }

    bool operator==(const CirculantBlockSpec& o) const {
        return generator == o.generator && selection == o.selection && scale == o.scale;
    }
};

/// Check block invariants for a given weight magnitude a.
inline void validate_block_spec(const CirculantBlockSpec& spec, double a) {
    const std::size_t w = spec.width();
    const std::size_t r = spec.rows();
    if (w == 0) throw ConfigError("block: empty generator");
    if (r == 0 || r > w) throw ConfigError("block: selection size must be in [1, w]");
    if (!(spec.scale > 0.0)) throw ConfigError("block: scale must be positive");
    if (!(a > 0.0)) throw ConfigError("block: weight a must be positive");
    for (double g : spec.generator) {
        if (g != 0.0 && g != a && g != -a) throw ConfigError("block: generator entry not in {-a, 0, +a}");
    }
    for (std::size_t i = 0; i < r; ++i) {
        if (spec.selection[i] >= w) throw ConfigError("block: selection index out of range");
        if (i > 0 && spec.selection[i] <= spec.selection[i - 1])
            throw ConfigError("block: selection indices must be strictly ascending");
    }
}

/// y = scale * restrict(selection, generator * x), the r x w block applied to x.
inline std::vector<double> apply_block(const CirculantBlockSpec& spec, std::span<const double> x) {
    const std::size_t w = spec.width();
    if (x.size() != w) throw DimensionError("apply_block: input length mismatch");
    std::vector<double> out(spec.rows(), 0.0);
    for (std::size_t t = 0; t < spec.rows(); ++t) {
        const std::size_t j = spec.selection[t];
        double s = 0.0;
        for (std::size_t i = 0; i < w; ++i) {
            s += spec.generator[(j + w - i) % w] * x[i];
        }
        out[t] = spec.scale * s;
    }
    return out;
}

/// Adjoint of apply_block: accumulates scale * C_v^T R_Omega^T y into out (length w).
inline void accumulate_block_adjoint(const CirculantBlockSpec& spec, std::span<const double> y,
                                     std::span<double> out) {
    const std::size_t w = spec.width();
    if (y.size() != spec.rows() || out.size() != w)
        throw DimensionError("block adjoint: length mismatch");
    for (std::size_t t = 0; t < spec.rows(); ++t) {
        const std::size_t j = spec.selection[t];
        const double yt = spec.scale * y[t];
        for (std::size_t i = 0; i < w; ++i) {
            out[i] += spec.generator[(j + w - i) % w] * yt;
        }
    }
}

/// Dense r x w realization of a block (row-major). Small sizes only.
inline std::vector<double> dense_block(const CirculantBlockSpec& spec) {
    const std::size_t w = spec.width();
    std::vector<double> m(spec.rows() * w);
    for (std::size_t t = 0; t < spec.rows(); ++t) {
        const std::size_t i = spec.selection[t];
        for (std::size_t j = 0; j < w; ++j) {
            m[t * w + j] = spec.scale * spec.generator[(i + w - j) % w];
        }
    }
    return m;
}

/// Ternary generator: each entry is 0 with probability p_zero, otherwise +-a.
inline std::vector<double> sample_generator(std::size_t w, double p_zero, double a, std::uint64_t seed) {
    if (w == 0) throw ConfigError("sample_generator: w must be >= 1");
    if (!(p_zero >= 0.0 && p_zero <= 1.0)) throw ConfigError("sample_generator: p_zero not a probability");
    Rng rng(seed);
    std::vector<double> v(w);
    for (std::size_t i = 0; i < w; ++i) {
        if (rng.uniform() < p_zero) {
            v[i] = 0.0;
        } else {
            v[i] = (rng.next_u64() & 1u) ? a : -a;
        }
    }
    return v;
}

/// r distinct indices drawn uniformly from {0..w-1}, returned ascending.
inline std::vector<std::size_t> sample_selection(std::size_t w, std::size_t r, std::uint64_t seed) {
    if (r == 0 || r > w) throw ConfigError("sample_selection: need 1 <= r <= w");
    Rng rng(seed);
    std::vector<std::size_t> pool(w);
    std::iota(pool.begin(), pool.end(), std::size_t{0});
    for (std::size_t i = 0; i < r; ++i) {
        const std::size_t j = i + rng.uniform_below(w - i);
        std::swap(pool[i], pool[j]);
    }
    std::vector<std::size_t> sel(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(r));
    std::sort(sel.begin(), sel.end());
    return sel;
}

/// Draw a full block spec from one block seed (generator and selection use
/// derived sub-streams, so the seed alone regenerates the block).
inline CirculantBlockSpec sample_block_spec(std::size_t w, std::size_t r, double p_zero, double a,
                                            std::uint64_t block_seed, double scale = 0.0) {
    CirculantBlockSpec spec;
    spec.generator = sample_generator(w, p_zero, a, sub_seed(block_seed, "gen"));
    spec.selection = sample_selection(w, r, sub_seed(block_seed, "sel"));
    spec.scale = scale > 0.0 ? scale : 1.0 / std::sqrt(static_cast<double>(r));
    spec.provenance = BlockProvenance{block_seed, p_zero};
    validate_block_spec(spec, a);
    return spec;
}

/// Image geometry of the measurement: n1 x n2 pixels read out in row
/// segments of width w (w must divide n2).
struct MatrixLayout {
    std::size_t n1 = 0;
    std::size_t n2 = 0;
    std::size_t w = 0;

    std::size_t pixels() const { return n1 * n2; }
    std::size_t segments_per_row() const { return n2 / w; }
    std::size_t num_blocks() const { return n1 * segments_per_row(); }
};

inline void validate_layout(const MatrixLayout& layout) {
    if (layout.n1 == 0 || layout.n2 == 0) throw ConfigError("layout: image dimensions must be positive");
    if (layout.w == 0 || layout.n2 % layout.w != 0)
        throw ConfigError("layout: segment width must divide image width");
}

/// Block-diagonal measurement matrix: one partial circulant block per row
/// segment, in row-major segment order. Immutable after construction.
class SensingMatrix {
public:
    SensingMatrix(MatrixLayout layout, std::vector<CirculantBlockSpec> blocks, double a = 1.0)
        : layout_(layout), a_(a), blocks_(std::move(blocks)) {
        validate_layout(layout_);
        if (blocks_.size() != layout_.num_blocks())
            throw ConfigError("sensing matrix: need one block per row segment");
        offsets_.resize(blocks_.size() + 1, 0);
        for (std::size_t k = 0; k < blocks_.size(); ++k) {
            validate_block_spec(blocks_[k], a_);
            if (blocks_[k].width() != layout_.w)
                throw ConfigError("sensing matrix: block width does not match layout");
            offsets_[k + 1] = offsets_[k] + blocks_[k].rows();
        }
    }

    std::size_t rows() const { return offsets_.back(); }
    std::size_t cols() const { return layout_.pixels(); }
    const MatrixLayout& layout() const { return layout_; }
    double weight() const { return a_; }
    double compression_ratio() const {
        return static_cast<double>(cols()) / static_cast<double>(rows());
    }

    std::size_t num_blocks() const { return blocks_.size(); }
    const CirculantBlockSpec& block(std::size_t k) const { return blocks_[k]; }
    std::size_t block_offset(std::size_t k) const { return offsets_[k]; }

    void forward(std::span<const double> x, std::span<double> y) const {
        if (x.size() != cols() || y.size() != rows()) throw DimensionError("forward: length mismatch");
        for (std::size_t k = 0; k < blocks_.size(); ++k) {
            const auto seg = x.subspan(k * layout_.w, layout_.w);
            const auto yk = apply_block(blocks_[k], seg);
            std::copy(yk.begin(), yk.end(), y.begin() + static_cast<std::ptrdiff_t>(offsets_[k]));
        }
    }

    void adjoint(std::span<const double> y, std::span<double> x) const {
        if (y.size() != rows() || x.size() != cols()) throw DimensionError("adjoint: length mismatch");
        std::fill(x.begin(), x.end(), 0.0);
        for (std::size_t k = 0; k < blocks_.size(); ++k) {
            accumulate_block_adjoint(blocks_[k], y.subspan(offsets_[k], blocks_[k].rows()),
                                     x.subspan(k * layout_.w, layout_.w));
        }
    }

    std::vector<double> apply(std::span<const double> x) const {
        std::vector<double> y(rows());
        forward(x, y);
        return y;
    }

    std::vector<double> apply_adjoint(std::span<const double> y) const {
        std::vector<double> x(cols());
        adjoint(y, x);
        return x;
    }

private:
    MatrixLayout layout_;
    double a_;
    std::vector<CirculantBlockSpec> blocks_;
    std::vector<std::size_t> offsets_;
};

/// Random sensing matrix with independent per-block sub-streams of one seed.
inline SensingMatrix make_sensing_matrix(const MatrixLayout& layout, std::size_t r, double p_zero,
                                         double a, std::uint64_t seed, double scale = 0.0) {
    validate_layout(layout);
    std::vector<CirculantBlockSpec> blocks;
    blocks.reserve(layout.num_blocks());
    for (std::size_t k = 0; k < layout.num_blocks(); ++k) {
        blocks.push_back(sample_block_spec(layout.w, r, p_zero, a, sub_seed(seed, "matrix.block", k)));
    }
    return SensingMatrix(layout, std::move(blocks), a);
}

/// Sensing matrix using the same block spec at every row segment.
inline SensingMatrix make_uniform_sensing_matrix(const MatrixLayout& layout,
                                                 const CirculantBlockSpec& spec, double a = 1.0) {
    validate_layout(layout);
    std::vector<CirculantBlockSpec> blocks(layout.num_blocks(), spec);
    return SensingMatrix(layout, std::move(blocks), a);
}

namespace detail {

/// Eigenvalues of a small dense symmetric matrix (cyclic Jacobi).
inline std::vector<double> symmetric_eigenvalues(std::vector<double> a, std::size_t n) {
    if (n == 1) return {a[0]};
    for (int sweep = 0; sweep < 64; ++sweep) {
        double off = 0.0;
        for (std::size_t p = 0; p < n; ++p)
            for (std::size_t q = p + 1; q < n; ++q) off += a[p * n + q] * a[p * n + q];
        if (off < 1e-30) break;
        for (std::size_t p = 0; p < n; ++p) {
            for (std::size_t q = p + 1; q < n; ++q) {
                const double apq = a[p * n + q];
                if (apq == 0.0) continue;
                const double theta = (a[q * n + q] - a[p * n + p]) / (2.0 * apq);
                const double t = (theta >= 0.0 ? 1.0 : -1.0) /
                                 (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                const double c = 1.0 / std::sqrt(t * t + 1.0);
                const double s = t * c;
                for (std::size_t k = 0; k < n; ++k) {
                    const double akp = a[k * n + p];
                    const double akq = a[k * n + q];
                    a[k * n + p] = c * akp - s * akq;
                    a[k * n + q] = s * akp + c * akq;
                }
                for (std::size_t k = 0; k < n; ++k) {
                    const double apk = a[p * n + k];
                    const double aqk = a[q * n + k];
                    a[p * n + k] = c * apk - s * aqk;
                    a[q * n + k] = s * apk + c * aqk;
                }
            }
        }
    }
    std::vector<double> eig(n);
    for (std::size_t i = 0; i < n; ++i) eig[i] = a[i * n + i];
    return eig;
}

/// C(n, k) saturated at `cap + 1` to avoid overflow.
inline std::size_t binomial_capped(std::size_t n, std::size_t k, std::size_t cap) {
    if (k > n) return 0;
    k = std::min(k, n - k);
    unsigned long long result = 1;
    for (std::size_t i = 1; i <= k; ++i) {
        if (result > cap) return cap + 1;
        result = result * (n - k + i) / i; // running value is C(n-k+i, i), division exact
    }
    return result > cap ? cap + 1 : static_cast<std::size_t>(result);
}

} // namespace detail

enum class RipMethod { exhaustive, sampled };

/// Empirical restricted-isometry constant of one block.
struct RipEstimate {
    std::size_t sparsity = 0;
    double delta = 0.0;
    RipMethod method = RipMethod::exhaustive;
    std::size_t supports_checked = 0;
};

struct RipOptions {
    std::size_t exhaustive_cap = 1'000'000;
    std::size_t samples = 20'000;
    std::uint64_t seed = 0;
};

/// Empirical s-RIP constant of the dense block realization: the worst
/// deviation max(1 - sigma_min^2, sigma_max^2 - 1) over column supports of
/// size s. Exhaustive enumeration when C(w, s) fits under the cap.
inline RipEstimate estimate_rip(const CirculantBlockSpec& spec, std::size_t s,
                                RipMethod method = RipMethod::exhaustive, RipOptions opts = {}) {
    const std::size_t w = spec.width();
    const std::size_t r = spec.rows();
    if (s == 0 || s > w) throw ConfigError("estimate_rip: need 1 <= s <= w");
    const std::vector<double> dense = dense_block(spec);

    auto support_delta = [&](const std::vector<std::size_t>& support) {
        // Gram matrix of the selected columns; its eigenvalues are sigma^2.
        std::vector<double> gram(s * s, 0.0);
        for (std::size_t ai = 0; ai < s; ++ai) {
            for (std::size_t bi = ai; bi < s; ++bi) {
                double g = 0.0;
                for (std::size_t row = 0; row < r; ++row) {
                    g += dense[row * w + support[ai]] * dense[row * w + support[bi]];
                }
                gram[ai * s + bi] = g;
                gram[bi * s + ai] = g;
            }
        }
        const auto eig = detail::symmetric_eigenvalues(std::move(gram), s);
        const auto [lo, hi] = std::minmax_element(eig.begin(), eig.end());
        return std::max(1.0 - *lo, *hi - 1.0);
    };

    RipEstimate estimate;
    estimate.sparsity = s;
    estimate.method = method;

    if (method == RipMethod::exhaustive) {
        const std::size_t count = detail::binomial_capped(w, s, opts.exhaustive_cap);
        if (count > opts.exhaustive_cap)
            throw ConfigError("estimate_rip: C(w, s) exceeds exhaustive cap; use RipMethod::sampled");
        std::vector<std::size_t> support(s);
        std::iota(support.begin(), support.end(), std::size_t{0});
        for (;;) {
            estimate.delta = std::max(estimate.delta, support_delta(support));
            ++estimate.supports_checked;
            // next lexicographic combination
            std::size_t i = s;
            while (i > 0 && support[i - 1] == w - s + i - 1) --i;
            if (i == 0) break;
            ++support[i - 1];
            for (std::size_t j = i; j < s; ++j) support[j] = support[j - 1] + 1;
        }
    } else {
        Rng rng(sub_seed(opts.seed, "rip.sample"));
        std::vector<std::size_t> pool(w);
        for (std::size_t trial = 0; trial < opts.samples; ++trial) {
            std::iota(pool.begin(), pool.end(), std::size_t{0});
            for (std::size_t i = 0; i < s; ++i) {
                const std::size_t j = i + rng.uniform_below(w - i);
                std::swap(pool[i], pool[j]);
            }
            std::vector<std::size_t> support(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(s));
            estimate.delta = std::max(estimate.delta, support_delta(support));
            ++estimate.supports_checked;
        }
    }
    return estimate;
}

/// Largest singular value estimate from power iteration on A^T A.
struct OperatorNormEstimate {
    double value = 0.0;
    bool converged = false;
};

template <LinearOperator Op>
OperatorNormEstimate operator_norm(const Op& op, std::size_t max_iters = 5000, double tol = 1e-13) {
    const std::size_t n = op.cols();
    const std::size_t m = op.rows();
    std::vector<double> v(n);
    Rng rng(0x746f666373u); // fixed seed: estimates must be reproducible
    for (auto& vi : v) vi = rng.gaussian();
    const double v0 = norm2(v);
    if (v0 == 0.0 || n == 0 || m == 0) return {0.0, true};
    for (auto& vi : v) vi /= v0;

    std::vector<double> av(m), atav(n);
    double prev = 0.0;
    OperatorNormEstimate est;
    for (std::size_t it = 0; it < max_iters; ++it) {
        op.forward(v, av);
        const double sigma2 = dot(av, av); // Rayleigh quotient of A^T A at unit v
        est.value = std::sqrt(sigma2);
        if (it > 0 && std::abs(est.value - prev) <= tol * std::max(est.value, 1e-300)) {
            est.converged = true;
            return est;
        }
        prev = est.value;
        op.adjoint(av, atav);
        const double nn = norm2(atav);
        if (nn == 0.0) {
            est.value = 0.0;
            est.converged = true;
            return est;
        }
        for (std::size_t i = 0; i < n; ++i) v[i] = atav[i] / nn;
    }
    return est; // not converged: best estimate with warning flag
}

} // namespace tofcs

#endif
