#ifndef TOFCS_SOLVERS_HPP
#define TOFCS_SOLVERS_HPP

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstddef>
#include <functional>
#include <span>
#include <thread>
#include <vector>

#include "tofcs/errors.hpp"
#include "tofcs/image.hpp"
#include "tofcs/sensing.hpp"
#include "tofcs/transforms.hpp"

namespace tofcs {

/// Componentwise sign(x) * max(|x| - t, 0), the prox of t * l1.
inline double soft_threshold(double x, double t) {
    if (x > t) return x - t;
    if (x < -t) return x + t;
    return 0.0;
}

inline std::vector<double> soft_threshold(std::span<const double> x, double t) {
    if (t < 0.0) throw ConfigError("soft_threshold: negative threshold");
    std::vector<double> out(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) out[i] = soft_threshold(x[i], t);
    return out;
}

struct FistaConfig {
    double lambda = 0.05;
    std::size_t max_iters = 0; // 0: driver default (300 block-wise, 1000 global)
    double step = 0.0;         // 0: 1 / (2 * 1.05 * |op|^2) from power iteration
    double stop_tol = 0.0;     // 0: run the full budget
};

struct TvConfig {
    double mu = 0.1;
    std::size_t max_iters = 0; // 0: driver default (100 block-wise, 300 global)
    double sigma = 0.0;        // dual step; 0: 0.99 / |[D; B]|
    double tau = 0.0;          // primal step; 0: 0.99 / |[D; B]|
    double theta = 1.0;
    double stop_tol = 0.0;
};

struct SolveResult {
    std::vector<double> x;
    std::size_t iterations = 0;
};

using IterateCallback = std::function<void(std::size_t, std::span<const double>)>;

/// lambda |z|_1 + |op z - y|^2, the objective minimized by fista_solve.
template <LinearOperator Op>
double fista_objective(const Op& op, std::span<const double> y, double lambda,
                       std::span<const double> z) {
    std::vector<double> r(op.rows());
    op.forward(z, r);
    double data = 0.0;
    for (std::size_t i = 0; i < r.size(); ++i) data += (r[i] - y[i]) * (r[i] - y[i]);
    double l1 = 0.0;
    for (double zi : z) l1 += std::abs(zi);
    return lambda * l1 + data;
}

/// FISTA for min_z lambda |z|_1 + |op z - y|^2, started at zero.
template <LinearOperator Op>
SolveResult fista_solve(const Op& op, std::span<const double> y, const FistaConfig& cfg,
                        const IterateCallback& on_iterate = {}) {
    if (cfg.lambda < 0.0) throw ConfigError("fista: lambda must be nonnegative");
    if (cfg.max_iters == 0) throw ConfigError("fista: iteration budget must be >= 1");
    if (y.size() != op.rows()) throw DimensionError("fista: data length mismatch");

    const double nrm = operator_norm(op, 1500, 1e-9).value;
    double step = cfg.step;
    if (step == 0.0) {
        // Lipschitz constant of the data gradient is 2 |op|^2; 5% margin on it.
        step = nrm > 0.0 ? 1.0 / (2.0 * 1.05 * nrm * nrm) : 1.0;
    } else {
        if (step <= 0.0) throw ConfigError("fista: step must be positive");
        if (nrm > 0.0 && step > 1.01 / (2.0 * nrm * nrm))
            throw ConfigError("fista: step exceeds 1/(2|op|^2)");
    }

    const std::size_t n = op.cols();
    std::vector<double> z(n, 0.0), u(n, 0.0), z_next(n), grad(n), resid(op.rows());
    double t = 1.0;
    SolveResult result;
    for (std::size_t it = 1; it <= cfg.max_iters; ++it) {
        op.forward(u, resid);
        for (std::size_t i = 0; i < resid.size(); ++i) resid[i] -= y[i];
        op.adjoint(resid, grad);
        for (std::size_t i = 0; i < n; ++i)
            z_next[i] = soft_threshold(u[i] - 2.0 * step * grad[i], step * cfg.lambda);

        const double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
        const double momentum = (t - 1.0) / t_next;
        double change2 = 0.0, norm2z = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double d = z_next[i] - z[i];
            change2 += d * d;
            norm2z += z_next[i] * z_next[i];
            u[i] = z_next[i] + momentum * d;
        }
        z.swap(z_next);
        t = t_next;
        result.iterations = it;
        if (on_iterate) on_iterate(it, z);
        if (cfg.stop_tol > 0.0 && std::sqrt(change2) <= cfg.stop_tol * std::max(std::sqrt(norm2z), 1e-12))
            break;
    }
    result.x = std::move(z);
    return result;
}

/// mu |D z|_1 + |op z - y|^2, the objective minimized by chambolle_pock_tv.
template <LinearOperator Op>
double tv_objective(const Op& op, std::span<const double> y, double mu, const Image& z) {
    std::vector<double> r(op.rows());
    op.forward(z.flat(), r);
    double data = 0.0;
    for (std::size_t i = 0; i < r.size(); ++i) data += (r[i] - y[i]) * (r[i] - y[i]);
    return mu * tv_seminorm(z) + data;
}

namespace detail {

/// Stacked operator [D; B] used for the primal-dual step-size bound.
template <LinearOperator Op>
struct StackedTvOperator {
    const Op* op;
    std::size_t n1, n2;

    std::size_t rows() const { return 2 * n1 * n2 + op->rows(); }
    std::size_t cols() const { return n1 * n2; }

    void forward(std::span<const double> x, std::span<double> out) const {
        const std::size_t n = n1 * n2;
        for (std::size_t i = 0; i < n1; ++i) {
            for (std::size_t j = 0; j < n2; ++j) {
                const std::size_t idx = i * n2 + j;
                out[idx] = (j + 1 < n2) ? x[idx + 1] - x[idx] : 0.0;
                out[n + idx] = (i + 1 < n1) ? x[idx + n2] - x[idx] : 0.0;
            }
        }
        op->forward(x, out.subspan(2 * n));
    }

    void adjoint(std::span<const double> q, std::span<double> out) const {
        const std::size_t n = n1 * n2;
        std::vector<double> bt(n);
        op->adjoint(q.subspan(2 * n), bt);
        const auto qx = q.subspan(0, n);
        const auto qy = q.subspan(n, n);
        for (std::size_t i = 0; i < n1; ++i) {
            for (std::size_t j = 0; j < n2; ++j) {
                const std::size_t idx = i * n2 + j;
                double d = 0.0; // D^T q = -divergence(q)
                if (j + 1 < n2) d -= qx[idx];
                if (j > 0) d += qx[idx - 1];
                if (i + 1 < n1) d -= qy[idx];
                if (i > 0) d += qy[idx - n2];
                out[idx] = d + bt[idx];
            }
        }
    }
};

} // namespace detail

/// Chambolle-Pock primal-dual iteration for min_z mu |D z|_1 + |op z - y|^2.
/// Both terms are dualized: the TV dual is a projection onto the l-inf ball
/// of radius mu, the data dual prox is (q - sigma y) / (1 + sigma / 2).
template <LinearOperator Op>
SolveResult chambolle_pock_tv(const Op& op, std::span<const double> y, std::size_t n1,
                              std::size_t n2, const TvConfig& cfg,
                              const IterateCallback& on_iterate = {}) {
    if (cfg.mu < 0.0) throw ConfigError("tv: mu must be nonnegative");
    if (cfg.max_iters == 0) throw ConfigError("tv: iteration budget must be >= 1");
    if (!(cfg.theta >= 0.0 && cfg.theta <= 1.0)) throw ConfigError("tv: theta must be in [0, 1]");
    if (op.cols() != n1 * n2) throw DimensionError("tv: operator does not match image size");
    if (y.size() != op.rows()) throw DimensionError("tv: data length mismatch");

    const detail::StackedTvOperator<Op> stacked{&op, n1, n2};
    const double norm_k = operator_norm(stacked, 1500, 1e-9).value;
    double sigma = cfg.sigma, tau = cfg.tau;
    if (sigma == 0.0 && tau == 0.0) {
        sigma = tau = norm_k > 0.0 ? 0.99 / norm_k : 1.0;
    } else {
        if (sigma <= 0.0 || tau <= 0.0) throw ConfigError("tv: steps must be positive");
        if (sigma * tau * norm_k * norm_k > 1.0 + 1e-9)
            throw ConfigError("tv: sigma * tau * |K|^2 must be <= 1");
    }

    const std::size_t n = n1 * n2;
    const std::size_t m = op.rows();
    std::vector<double> z(n, 0.0), z_bar(n, 0.0), z_next(n);
    std::vector<double> qx(n, 0.0), qy(n, 0.0), q2(m, 0.0);
    std::vector<double> bz(m), bt_q(n);

    SolveResult result;
    for (std::size_t it = 1; it <= cfg.max_iters; ++it) {
        // dual ascent on both blocks
        for (std::size_t i = 0; i < n1; ++i) {
            for (std::size_t j = 0; j < n2; ++j) {
                const std::size_t idx = i * n2 + j;
                if (j + 1 < n2) qx[idx] = std::clamp(qx[idx] + sigma * (z_bar[idx + 1] - z_bar[idx]),
                                                     -cfg.mu, cfg.mu);
                if (i + 1 < n1) qy[idx] = std::clamp(qy[idx] + sigma * (z_bar[idx + n2] - z_bar[idx]),
                                                     -cfg.mu, cfg.mu);
            }
        }
        op.forward(z_bar, bz);
        const double denom = 1.0 + 0.5 * sigma;
        for (std::size_t i = 0; i < m; ++i) q2[i] = (q2[i] + sigma * (bz[i] - y[i])) / denom;

        // primal descent: z - tau (D^T q1 + B^T q2)
        op.adjoint(q2, bt_q);
        double change2 = 0.0, norm2z = 0.0;
        for (std::size_t i = 0; i < n1; ++i) {
            for (std::size_t j = 0; j < n2; ++j) {
                const std::size_t idx = i * n2 + j;
                double dt = 0.0;
                if (j + 1 < n2) dt -= qx[idx];
                if (j > 0) dt += qx[idx - 1];
                if (i + 1 < n1) dt -= qy[idx];
                if (i > 0) dt += qy[idx - n2];
                z_next[idx] = z[idx] - tau * (dt + bt_q[idx]);
                const double d = z_next[idx] - z[idx];
                change2 += d * d;
                norm2z += z_next[idx] * z_next[idx];
                z_bar[idx] = z_next[idx] + cfg.theta * d;
            }
        }
        z.swap(z_next);
        result.iterations = it;
        if (on_iterate) on_iterate(it, z);
        if (cfg.stop_tol > 0.0 && std::sqrt(change2) <= cfg.stop_tol * std::max(std::sqrt(norm2z), 1e-12))
            break;
    }
    result.x = std::move(z);
    return result;
}

/// One rectangular piece of the reconstruction tiling.
struct Tile {
    std::size_t row0 = 0, col0 = 0, rows = 0, cols = 0;
};

/// Square tiling of the image into reconstruction blocks; border tiles are
/// truncated so the union covers every pixel exactly once.
struct BlockPartition {
    std::size_t image_rows = 0, image_cols = 0, b = 0;
    std::vector<Tile> tiles;
};

inline BlockPartition make_partition(std::size_t n1, std::size_t n2, std::size_t b, std::size_t w) {
    if (b == 0 || w == 0 || b % w != 0) throw ConfigError("partition: b must be a multiple of w");
    if (b > n1 || b > n2) throw ConfigError("partition: block side exceeds image");
    BlockPartition part{n1, n2, b, {}};
    for (std::size_t r = 0; r < n1; r += b) {
        for (std::size_t c = 0; c < n2; c += b) {
            part.tiles.push_back(Tile{r, c, std::min(b, n1 - r), std::min(b, n2 - c)});
        }
    }
    return part;
}

/// Measurement operator restricted to the sensing blocks inside one tile.
/// Input/output are tile-local (row-major tile pixels; measurements in
/// ascending global block order).
class TileSensingView {
public:
    TileSensingView(const SensingMatrix& matrix, const Tile& tile) : matrix_(&matrix), tile_(tile) {
        const auto& layout = matrix.layout();
        const std::size_t w = layout.w;
        if (tile.col0 % w != 0 || tile.cols % w != 0 || tile.row0 + tile.rows > layout.n1 ||
            tile.col0 + tile.cols > layout.n2)
            throw ConfigError("tile view: tile not aligned with sensing segments");
        const std::size_t segs = layout.segments_per_row();
        for (std::size_t r = tile.row0; r < tile.row0 + tile.rows; ++r) {
            for (std::size_t c = tile.col0; c < tile.col0 + tile.cols; c += w) {
                const std::size_t k = r * segs + c / w;
                block_ids_.push_back(k);
                m_ += matrix.block(k).rows();
            }
        }
    }

    std::size_t rows() const { return m_; }
    std::size_t cols() const { return tile_.rows * tile_.cols; }
    const std::vector<std::size_t>& block_ids() const { return block_ids_; }

    void forward(std::span<const double> x, std::span<double> y) const {
        if (x.size() != cols() || y.size() != rows()) throw DimensionError("tile forward: size mismatch");
        const std::size_t w = matrix_->layout().w;
        std::size_t off = 0;
        for (std::size_t k : block_ids_) {
            const auto& spec = matrix_->block(k);
            const auto yk = apply_block(spec, x.subspan(local_offset(k), w));
            std::copy(yk.begin(), yk.end(), y.begin() + static_cast<std::ptrdiff_t>(off));
            off += spec.rows();
        }
    }

    void adjoint(std::span<const double> y, std::span<double> x) const {
        if (y.size() != rows() || x.size() != cols()) throw DimensionError("tile adjoint: size mismatch");
        std::fill(x.begin(), x.end(), 0.0);
        const std::size_t w = matrix_->layout().w;
        std::size_t off = 0;
        for (std::size_t k : block_ids_) {
            const auto& spec = matrix_->block(k);
            accumulate_block_adjoint(spec, y.subspan(off, spec.rows()), x.subspan(local_offset(k), w));
            off += spec.rows();
        }
    }

    /// Slice this tile's measurements out of the full measurement vector.
    std::vector<double> gather(std::span<const double> y_full) const {
        std::vector<double> y(m_);
        std::size_t off = 0;
        for (std::size_t k : block_ids_) {
            const std::size_t r = matrix_->block(k).rows();
            const auto src = y_full.subspan(matrix_->block_offset(k), r);
            std::copy(src.begin(), src.end(), y.begin() + static_cast<std::ptrdiff_t>(off));
            off += r;
        }
        return y;
    }

private:
    std::size_t local_offset(std::size_t k) const {
        const auto& layout = matrix_->layout();
        const std::size_t segs = layout.segments_per_row();
        const std::size_t local_row = k / segs - tile_.row0;
        const std::size_t local_col = (k % segs) * layout.w - tile_.col0;
        return local_row * tile_.cols + local_col;
    }

    const SensingMatrix* matrix_;
    Tile tile_;
    std::vector<std::size_t> block_ids_;
    std::size_t m_ = 0;
};

/// Tile operator composed with per-tile Haar synthesis, so FISTA iterates
/// in coefficient space. Orthonormality makes the adjoint the analysis.
template <LinearOperator Inner>
struct SynthesisOperator {
    const Inner* inner;
    HaarPlan plan;

    std::size_t rows() const { return inner->rows(); }
    std::size_t cols() const { return inner->cols(); }

    void forward(std::span<const double> z, std::span<double> y) const {
        std::vector<double> img(z.size());
        haar_inverse(plan, z, img);
        inner->forward(img, y);
    }

    void adjoint(std::span<const double> y, std::span<double> z) const {
        std::vector<double> img(z.size());
        inner->adjoint(y, img);
        haar_forward(plan, img, z);
    }
};

enum class SolverKind { fista, tv };

struct SolverOptions {
    FistaConfig fista{};
    TvConfig tv{};
    std::size_t block_size = 28;
    int threads = 1;
};

namespace detail {

inline FistaConfig resolve_fista(FistaConfig cfg, bool global_mode) {
    if (cfg.max_iters == 0) cfg.max_iters = global_mode ? 1000 : 300;
    return cfg;
}

inline TvConfig resolve_tv(TvConfig cfg, bool global_mode) {
    if (cfg.max_iters == 0) cfg.max_iters = global_mode ? 300 : 100;
    return cfg;
}

inline SolveResult solve_tile(SolverKind kind, const TileSensingView& view, const Tile& tile,
                              std::span<const double> y_tile, const FistaConfig& fista_cfg,
                              const TvConfig& tv_cfg) {
    if (kind == SolverKind::fista) {
        const HaarPlan plan = make_haar_plan(tile.rows, tile.cols);
        const SynthesisOperator<TileSensingView> op{&view, plan};
        SolveResult res = fista_solve(op, y_tile, fista_cfg);
        std::vector<double> img(res.x.size());
        haar_inverse(plan, res.x, img);
        res.x = std::move(img);
        return res;
    }
    return chambolle_pock_tv(view, y_tile, tile.rows, tile.cols, tv_cfg);
}

} // namespace detail

/// Solve one independent problem per tile and stitch the pieces together.
/// Tiles write disjoint pixel ranges, so the result does not depend on the
/// number of worker threads.
inline Image reconstruct_blockwise(SolverKind kind, const SensingMatrix& matrix,
                                   std::span<const double> y, const BlockPartition& part,
                                   const SolverOptions& opts, std::size_t* iterations_out = nullptr) {
    const auto& layout = matrix.layout();
    if (part.image_rows != layout.n1 || part.image_cols != layout.n2)
        throw ConfigError("reconstruct: partition does not match sensing layout");
    if (part.b % layout.w != 0) throw ConfigError("reconstruct: partition not aligned with segments");
    if (y.size() != matrix.rows()) throw DimensionError("reconstruct: measurement length mismatch");

    const FistaConfig fista_cfg = detail::resolve_fista(opts.fista, false);
    const TvConfig tv_cfg = detail::resolve_tv(opts.tv, false);

    Image out(layout.n1, layout.n2);
    std::vector<std::size_t> iter_counts(part.tiles.size(), 0);

    auto solve_one = [&](std::size_t idx) {
        const Tile& tile = part.tiles[idx];
        const TileSensingView view(matrix, tile);
        const auto y_tile = view.gather(y);
        const SolveResult res = detail::solve_tile(kind, view, tile, y_tile, fista_cfg, tv_cfg);
        iter_counts[idx] = res.iterations;
        for (std::size_t i = 0; i < tile.rows; ++i) {
            for (std::size_t j = 0; j < tile.cols; ++j) {
                out.at(tile.row0 + i, tile.col0 + j) = res.x[i * tile.cols + j];
            }
        }
    };

    const int threads = std::max(1, opts.threads);
    if (threads == 1 || part.tiles.size() == 1) {
        for (std::size_t idx = 0; idx < part.tiles.size(); ++idx) solve_one(idx);
    } else {
        std::atomic<std::size_t> next{0};
        auto worker = [&] {
            for (;;) {
                const std::size_t idx = next.fetch_add(1);
                if (idx >= part.tiles.size()) return;
                solve_one(idx);
            }
        };
        std::vector<std::thread> pool;
        const std::size_t count = std::min(static_cast<std::size_t>(threads), part.tiles.size());
        pool.reserve(count);
        for (std::size_t i = 0; i < count; ++i) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
    }

    if (iterations_out) *iterations_out = iter_counts.empty() ? 0 : iter_counts.front();
    return out;
}

/// One problem covering the whole image (single-tile partition).
inline Image reconstruct_global(SolverKind kind, const SensingMatrix& matrix,
                                std::span<const double> y, const SolverOptions& opts,
                                std::size_t* iterations_out = nullptr) {
    const auto& layout = matrix.layout();
    if (y.size() != matrix.rows()) throw DimensionError("reconstruct: measurement length mismatch");
    const Tile tile{0, 0, layout.n1, layout.n2};
    const TileSensingView view(matrix, tile);
    const auto y_tile = view.gather(y);
    const SolveResult res =
        detail::solve_tile(kind, view, tile, y_tile, detail::resolve_fista(opts.fista, true),
                           detail::resolve_tv(opts.tv, true));
    if (iterations_out) *iterations_out = res.iterations;
    Image out(layout.n1, layout.n2);
    std::copy(res.x.begin(), res.x.end(), out.flat().begin());
    return out;
}

} // namespace tofcs

#endif
