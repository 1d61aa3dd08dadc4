#ifndef TOFCS_PIPELINE_HPP
#define TOFCS_PIPELINE_HPP

#include <array>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <string>
#include <thread>
#include <vector>

#include "tofcs/errors.hpp"
#include "tofcs/image.hpp"
#include "tofcs/image_io.hpp"
#include "tofcs/sensing.hpp"
#include "tofcs/solvers.hpp"
#include "tofcs/tof_model.hpp"

namespace tofcs {

enum class ReconMethod { fista_block, fista_global, tv_block, tv_global };

inline const std::array<ReconMethod, 4> all_methods = {
    ReconMethod::fista_block, ReconMethod::fista_global, ReconMethod::tv_block,
    ReconMethod::tv_global};

inline std::string method_name(ReconMethod m) {
    switch (m) {
        case ReconMethod::fista_block: return "fista-block";
        case ReconMethod::fista_global: return "fista-global";
        case ReconMethod::tv_block: return "tv-block";
        case ReconMethod::tv_global: return "tv-global";
    }
    return "?";
}

inline ReconMethod parse_method(const std::string& name) {
    for (ReconMethod m : all_methods) {
        if (method_name(m) == name) return m;
    }
    throw ConfigError("unknown method: " + name);
}

inline bool method_is_global(ReconMethod m) {
    return m == ReconMethod::fista_global || m == ReconMethod::tv_global;
}

inline SolverKind method_kind(ReconMethod m) {
    return (m == ReconMethod::fista_block || m == ReconMethod::fista_global) ? SolverKind::fista
                                                                             : SolverKind::tv;
}

/// Compressed read-out of both difference images.
struct MeasurementPair {
    std::vector<double> y_u, y_v;
};

inline MeasurementPair compress(const DifferencePair& pair, const SensingMatrix& matrix) {
    if (pair.u.rows() != matrix.layout().n1 || pair.u.cols() != matrix.layout().n2 ||
        !pair.u.same_shape(pair.v))
        throw DimensionError("compress: image does not match sensing layout");
    return MeasurementPair{matrix.apply(pair.u.flat()), matrix.apply(pair.v.flat())};
}

/// Reconstruct one image from its measurements with the requested method.
inline Image reconstruct_image(ReconMethod method, const SensingMatrix& matrix,
                               std::span<const double> y, const SolverOptions& opts,
                               std::size_t* iterations = nullptr) {
    if (method_is_global(method))
        return reconstruct_global(method_kind(method), matrix, y, opts, iterations);
    const auto& layout = matrix.layout();
    const auto part = make_partition(layout.n1, layout.n2, opts.block_size, layout.w);
    return reconstruct_blockwise(method_kind(method), matrix, y, part, opts, iterations);
}

/// Two-step recovery: estimate the differences, then invert the phase.
struct RecoveredDepth {
    DifferencePair differences;
    Image depth;
    std::vector<std::uint8_t> indeterminate;
    std::size_t iterations = 0;
};

/// Depth from already-estimated difference images (second step alone).
inline RecoveredDepth depth_from_differences(DifferencePair estimate, double omega) {
    RecoveredDepth out;
    auto phase = phase_from_differences(estimate);
    out.differences = std::move(estimate);
    out.depth = depth_from_phase(phase.phase, omega);
    out.indeterminate = std::move(phase.indeterminate);
    return out;
}

inline RecoveredDepth recover_depth(std::span<const double> y_u, std::span<const double> y_v,
                                    const SensingMatrix& matrix, ReconMethod method,
                                    const SolverOptions& opts, double omega) {
    std::size_t iters = 0;
    DifferencePair estimate{reconstruct_image(method, matrix, y_u, opts, &iters),
                            reconstruct_image(method, matrix, y_v, opts, nullptr)};
    RecoveredDepth out = depth_from_differences(std::move(estimate), omega);
    out.iterations = iters;
    return out;
}

/// Alternative route: recover all four phase images separately, then
/// difference them. Twice the solves for similar results.
inline RecoveredDepth recover_depth_four_phase(const std::array<std::vector<double>, 4>& ys,
                                               const SensingMatrix& matrix, ReconMethod method,
                                               const SolverOptions& opts, double omega) {
    std::size_t iters = 0;
    std::array<Image, 4> phases;
    for (std::size_t i = 0; i < 4; ++i) {
        phases[i] = reconstruct_image(method, matrix, ys[i], opts, i == 0 ? &iters : nullptr);
    }
    RecoveredDepth out = depth_from_differences(
        DifferencePair{phases[0] - phases[2], phases[3] - phases[1]}, omega);
    out.iterations = iters;
    return out;
}

/// MAE / RMAE / PSNR between a reference and a reconstruction. Pixels
/// flagged in `exclude` are left out of every sum; the count is reported.
struct Metrics {
    double mae = 0.0;      // meters
    double rmae_pct = 0.0; // percent of max |reference|
    double psnr_db = 0.0;  // +inf when the images agree exactly
    std::size_t excluded = 0;
};

inline Metrics compute_metrics(const Image& reference, const Image& reconstruction,
                               const std::vector<std::uint8_t>* exclude = nullptr) {
    if (!reference.same_shape(reconstruction)) throw DimensionError("metrics: shape mismatch");
    if (exclude && exclude->size() != reference.size())
        throw DimensionError("metrics: mask size mismatch");
    Metrics out;
    double abs_sum = 0.0, sq_sum = 0.0, ref_max = 0.0, ref_sq_max = 0.0;
    std::size_t included = 0;
    for (std::size_t i = 0; i < reference.size(); ++i) {
        if (exclude && (*exclude)[i]) {
            ++out.excluded;
            continue;
        }
        ++included;
        const double err = reference[i] - reconstruction[i];
        abs_sum += std::abs(err);
        sq_sum += err * err;
        ref_max = std::max(ref_max, std::abs(reference[i]));
        ref_sq_max = std::max(ref_sq_max, reference[i] * reference[i]);
    }
    if (included == 0) throw ConfigError("metrics: every pixel excluded");
    if (ref_max == 0.0) throw ConfigError("metrics: reference is identically zero");
    out.mae = abs_sum / static_cast<double>(included);
    out.rmae_pct = out.mae / ref_max * 100.0;
    out.psnr_db = sq_sum == 0.0
                      ? std::numeric_limits<double>::infinity()
                      : 10.0 * std::log10(static_cast<double>(included) * ref_sq_max / sq_sum);
    return out;
}

/// One benchmark row.
struct EvaluationReport {
    std::string scene;
    std::string method;
    double compression_ratio = 0.0;
    Metrics metrics;
    std::size_t iterations = 0;
    double wall_seconds = 0.0;
};

inline void write_reports_csv(const std::filesystem::path& path,
                              const std::vector<EvaluationReport>& rows) {
    std::ofstream out(path);
    if (!out) throw DataFormatError("cannot open for writing: " + path.string());
    out << "scene,method,cr,mae_m,rmae_pct,psnr_db,iters,wall_s\n";
    for (const auto& row : rows) {
        out << row.scene << "," << row.method << "," << format_double(row.compression_ratio) << ","
            << format_double(row.metrics.mae) << "," << format_double(row.metrics.rmae_pct) << ",";
        if (std::isinf(row.metrics.psnr_db))
            out << "inf";
        else
            out << format_double(row.metrics.psnr_db);
        out << "," << row.iterations << "," << format_double(row.wall_seconds) << "\n";
    }
    if (!out) throw DataFormatError("write failed: " + path.string());
}

// ---------------------------------------------------------------------------
// Candidate selection for measurement blocks.
// ---------------------------------------------------------------------------

struct Candidate {
    CirculantBlockSpec spec;
    std::uint64_t seed = 0;
};

struct CandidatePool {
    std::vector<Candidate> candidates;
};

inline CandidatePool make_candidate_pool(std::size_t count, std::size_t w, std::size_t r,
                                         double p_zero, double a, std::uint64_t master_seed) {
    if (count == 0) throw ConfigError("candidate pool: need at least one candidate");
    CandidatePool pool;
    pool.candidates.reserve(count);
    for (std::size_t i = 0; i < count; ++i) {
        const std::uint64_t seed = sub_seed(master_seed, "candidate", i);
        pool.candidates.push_back(Candidate{sample_block_spec(w, r, p_zero, a, seed), seed});
    }
    return pool;
}

/// Squared residual of the reconstructed differences, per row segment.
/// errors[c][k] accumulates candidate c at block position k over all test
/// images.
inline std::vector<std::vector<double>> score_candidates(const MatrixLayout& layout,
                                                         const CandidatePool& pool,
                                                         const std::vector<DifferencePair>& test_images,
                                                         ReconMethod method,
                                                         const SolverOptions& opts, double a = 1.0) {
    if (pool.candidates.empty()) throw ConfigError("candidate selection: empty pool");
    if (test_images.empty()) throw ConfigError("candidate selection: no test images");
    const std::size_t num_blocks = layout.num_blocks();
    std::vector<std::vector<double>> errors(pool.candidates.size(),
                                            std::vector<double>(num_blocks, 0.0));
    for (std::size_t c = 0; c < pool.candidates.size(); ++c) {
        const SensingMatrix trial = make_uniform_sensing_matrix(layout, pool.candidates[c].spec, a);
        for (const auto& pair : test_images) {
            const MeasurementPair y = compress(pair, trial);
            std::size_t iters = 0;
            const DifferencePair rec{reconstruct_image(method, trial, y.y_u, opts, &iters),
                                     reconstruct_image(method, trial, y.y_v, opts, nullptr)};
            for (std::size_t k = 0; k < num_blocks; ++k) {
                double err = 0.0;
                for (std::size_t j = 0; j < layout.w; ++j) {
                    const std::size_t idx = k * layout.w + j;
                    const double du = rec.u[idx] - pair.u[idx];
                    const double dv = rec.v[idx] - pair.v[idx];
                    err += du * du + dv * dv;
                }
                errors[c][k] += err;
            }
        }
    }
    return errors;
}

/// Per block position, the candidate with the lowest accumulated error;
/// ties go to the lowest candidate seed.
inline SensingMatrix select_candidates(const MatrixLayout& layout, const CandidatePool& pool,
                                       const std::vector<DifferencePair>& test_images,
                                       ReconMethod method, const SolverOptions& opts,
                                       double a = 1.0,
                                       std::vector<std::vector<double>>* errors_out = nullptr) {
    auto errors = score_candidates(layout, pool, test_images, method, opts, a);
    std::vector<CirculantBlockSpec> blocks;
    blocks.reserve(layout.num_blocks());
    for (std::size_t k = 0; k < layout.num_blocks(); ++k) {
        std::size_t best = 0;
        for (std::size_t c = 1; c < pool.candidates.size(); ++c) {
            const bool better = errors[c][k] < errors[best][k] ||
                                (errors[c][k] == errors[best][k] &&
                                 pool.candidates[c].seed < pool.candidates[best].seed);
            if (better) best = c;
        }
        blocks.push_back(pool.candidates[best].spec);
    }
    if (errors_out) *errors_out = std::move(errors);
    return SensingMatrix(layout, std::move(blocks), a);
}

// ---------------------------------------------------------------------------
// Compression-ratio sweep.
// ---------------------------------------------------------------------------

struct RatioSpec {
    double ratio = 1.0;
    double p_zero = 1.0 / 3.0;
};

struct SweepScene {
    std::string name;
    Scene scene;
};

struct SweepOptions {
    std::size_t w = 14;
    double a = 1.0;
    double noise_sigma = 0.0;
    std::uint64_t seed = 0;
    SolverOptions solver{};
    int threads = 1;
};

struct SweepOutcome {
    std::vector<EvaluationReport> rows;
    std::vector<std::string> errors; // infeasible entries, one message per row
};

/// One report row per (scene, ratio, method). Infeasible ratios are
/// reported and skipped; the sweep carries on.
inline SweepOutcome sweep(const std::vector<SweepScene>& scenes, const std::vector<RatioSpec>& ratios,
                          const std::vector<ReconMethod>& methods, const SweepOptions& opts) {
    SweepOutcome outcome;
    if (scenes.empty() || ratios.empty() || methods.empty()) return outcome;

    struct Task {
        std::size_t scene_idx, ratio_idx, method_idx;
    };
    std::vector<Task> tasks;
    for (std::size_t s = 0; s < scenes.size(); ++s)
        for (std::size_t r = 0; r < ratios.size(); ++r)
            for (std::size_t m = 0; m < methods.size(); ++m) tasks.push_back({s, r, m});

    std::vector<EvaluationReport> rows(tasks.size());
    std::vector<std::string> row_errors(tasks.size());

    auto run_task = [&](std::size_t t) {
        const Task& task = tasks[t];
        const SweepScene& entry = scenes[task.scene_idx];
        const RatioSpec& ratio = ratios[task.ratio_idx];
        EvaluationReport row;
        row.scene = entry.name;
        row.method = method_name(methods[task.method_idx]);
        row.compression_ratio = ratio.ratio;
        try {
            const auto r_ll = std::llround(static_cast<double>(opts.w) / ratio.ratio);
            if (r_ll < 1 || r_ll > static_cast<long long>(opts.w))
                throw ConfigError("infeasible compression ratio " + format_double(ratio.ratio));
            const auto r = static_cast<std::size_t>(r_ll);
            const MatrixLayout layout{entry.scene.rows(), entry.scene.cols(), opts.w};
            const SensingMatrix matrix = make_sensing_matrix(
                layout, r, ratio.p_zero, opts.a, sub_seed(opts.seed, "sweep.matrix", task.ratio_idx));
            row.compression_ratio = matrix.compression_ratio();

            PhaseImageSet phases = simulate_phase_images(entry.scene);
            if (opts.noise_sigma > 0.0) {
                phases = add_noise(phases, opts.noise_sigma,
                                   sub_seed(opts.seed, "sweep.noise",
                                            task.scene_idx * 1000 + task.ratio_idx));
            }
            const MeasurementPair y = compress(phase_differences(phases), matrix);

            const auto start = std::chrono::steady_clock::now();
            const RecoveredDepth rec = recover_depth(y.y_u, y.y_v, matrix,
                                                     methods[task.method_idx], opts.solver,
                                                     entry.scene.omega);
            const auto stop = std::chrono::steady_clock::now();
            row.wall_seconds = std::chrono::duration<double>(stop - start).count();
            row.iterations = rec.iterations;
            row.metrics = compute_metrics(entry.scene.depth, rec.depth, &rec.indeterminate);
            rows[t] = row;
        } catch (const std::exception& err) {
            rows[t] = row;
            row_errors[t] = row.scene + "/" + row.method + "@" + format_double(ratio.ratio) + ": " +
                            err.what();
        }
    };

    const int threads = std::max(1, opts.threads);
    if (threads == 1) {
        for (std::size_t t = 0; t < tasks.size(); ++t) run_task(t);
    } else {
        std::atomic<std::size_t> next{0};
        auto worker = [&] {
            for (;;) {
                const std::size_t t = next.fetch_add(1);
                if (t >= tasks.size()) return;
                run_task(t);
            }
        };
        std::vector<std::thread> pool;
        const std::size_t count = std::min(static_cast<std::size_t>(threads), tasks.size());
        for (std::size_t i = 0; i < count; ++i) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
    }

    for (std::size_t t = 0; t < tasks.size(); ++t) {
        if (!row_errors[t].empty())
            outcome.errors.push_back(row_errors[t]);
        else
            outcome.rows.push_back(rows[t]);
    }
    return outcome;
}

/// Per-method average RMAE / PSNR across scenes, one point per ratio.
struct SeriesPoint {
    double ratio = 0.0;
    double mean_rmae_pct = 0.0;
    double mean_psnr_db = 0.0;
    std::size_t count = 0;
};

inline std::vector<SeriesPoint> method_series(const std::vector<EvaluationReport>& rows,
                                              const std::string& method) {
    std::map<double, SeriesPoint> by_ratio;
    for (const auto& row : rows) {
        if (row.method != method) continue;
        auto& point = by_ratio[row.compression_ratio];
        point.ratio = row.compression_ratio;
        point.mean_rmae_pct += row.metrics.rmae_pct;
        point.mean_psnr_db += row.metrics.psnr_db;
        ++point.count;
    }
    std::vector<SeriesPoint> series;
    for (auto& [ratio, point] : by_ratio) {
        point.mean_rmae_pct /= static_cast<double>(point.count);
        point.mean_psnr_db /= static_cast<double>(point.count);
        series.push_back(point);
    }
    return series;
}

} // namespace tofcs

#endif
