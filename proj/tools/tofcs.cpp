// Command-line front end for the compressive ToF imaging toolkit.
//
// Subcommands: phantom, genmatrix, compress, reconstruct, select, sweep.
// Every run writes a manifest next to its outputs; re-running the same
// command reproduces the outputs byte for byte (wall times excluded).

#include <array>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "tofcs/image_io.hpp"
#include "tofcs/matrix_io.hpp"
#include "tofcs/phantom.hpp"
#include "tofcs/pipeline.hpp"

namespace fs = std::filesystem;
using namespace tofcs;

namespace {

constexpr const char* kToolVersion = "tofcs 0.1.0";

constexpr int kExitArgument = 2;
constexpr int kExitData = 3;
constexpr int kExitSolver = 4;

struct SolverFlags {
    double lambda = 0.05;
    double mu = 0.1;
    std::size_t iters = 0;
    std::size_t block_size = 28;
    int threads = 1;
    std::string config_path;

    CLI::Option* lambda_opt = nullptr;
    CLI::Option* mu_opt = nullptr;
    CLI::Option* iters_opt = nullptr;
    CLI::Option* block_opt = nullptr;
    CLI::Option* threads_opt = nullptr;

    void attach(CLI::App* cmd) {
        lambda_opt = cmd->add_option("--lambda", lambda, "l1 weight (default 0.05)");
        mu_opt = cmd->add_option("--mu", mu, "TV weight (default 0.1)");
        iters_opt = cmd->add_option("--iters", iters, "iteration budget (0: method default)");
        block_opt = cmd->add_option("--block-size", block_size, "reconstruction block side (default 28)");
        threads_opt = cmd->add_option("--threads", threads, "worker threads (default 1)");
        cmd->add_option("--config", config_path, "key = value solver config; flags win");
    }

    /// Defaults < config file < explicit flags.
    SolverOptions resolve() const {
        SolverOptions opts;
        opts.fista.lambda = lambda;
        opts.tv.mu = mu;
        opts.fista.max_iters = iters;
        opts.tv.max_iters = iters;
        opts.block_size = block_size;
        opts.threads = threads;
        if (!config_path.empty()) {
            const KeyValueFile cfg = KeyValueFile::load(config_path);
            if (cfg.has("lambda") && lambda_opt->count() == 0)
                opts.fista.lambda = cfg.get_double("lambda");
            if (cfg.has("mu") && mu_opt->count() == 0) opts.tv.mu = cfg.get_double("mu");
            if (cfg.has("iters") && iters_opt->count() == 0) {
                opts.fista.max_iters = static_cast<std::size_t>(cfg.get_uint("iters"));
                opts.tv.max_iters = opts.fista.max_iters;
            }
            if (cfg.has("block_size") && block_opt->count() == 0)
                opts.block_size = static_cast<std::size_t>(cfg.get_uint("block_size"));
            if (cfg.has("threads") && threads_opt->count() == 0)
                opts.threads = static_cast<int>(cfg.get_uint("threads"));
        }
        return opts;
    }

    void record(KeyValueFile& manifest, const SolverOptions& opts) const {
        manifest.set_double("lambda", opts.fista.lambda);
        manifest.set_double("mu", opts.tv.mu);
        manifest.set_uint("iters", opts.fista.max_iters);
        manifest.set_uint("block_size", opts.block_size);
    }
};

KeyValueFile new_manifest(const std::string& command) {
    KeyValueFile manifest;
    manifest.set("tool", kToolVersion);
    manifest.set("command", command);
    return manifest;
}

std::vector<std::string> split_list(const std::string& csv) {
    std::vector<std::string> items;
    std::size_t start = 0;
    while (start <= csv.size()) {
        const auto pos = csv.find(',', start);
        const std::string item = csv.substr(start, pos == std::string::npos ? pos : pos - start);
        if (!item.empty()) items.push_back(item);
        if (pos == std::string::npos) break;
        start = pos + 1;
    }
    return items;
}

DifferencePair scene_differences(const Scene& scene) {
    return phase_differences(simulate_phase_images(scene));
}

int cmd_phantom(const std::string& kind_name, std::size_t n1, std::size_t n2, std::uint64_t seed,
                const std::string& out) {
    const PhantomKind kind = parse_phantom_kind(kind_name);
    const Scene scene = make_phantom(kind, n1, n2, seed);
    write_scene(out, scene, seed, phantom_kind_name(kind));
    KeyValueFile manifest = new_manifest("phantom");
    manifest.set("kind", kind_name);
    manifest.set_uint("n1", n1);
    manifest.set_uint("n2", n2);
    manifest.set_uint("seed", seed);
    manifest.set("out", out);
    manifest.save(fs::path(out) / "manifest.txt");
    std::cout << "wrote scene '" << kind_name << "' " << n1 << "x" << n2 << " to " << out << "\n";
    return 0;
}

int cmd_genmatrix(std::size_t n1, std::size_t n2, std::size_t w, std::size_t r, double p_zero,
                  double a, double scale, std::uint64_t seed, bool compact, const std::string& out) {
    const MatrixLayout layout{n1, n2, w};
    const SensingMatrix matrix = make_sensing_matrix(layout, r, p_zero, a, seed, scale);
    write_matrix(out, matrix, compact ? MatrixForm::compact : MatrixForm::explicit_entries);

    std::size_t zeros = 0, entries = 0;
    for (std::size_t k = 0; k < matrix.num_blocks(); ++k) {
        for (double v : matrix.block(k).generator) {
            entries++;
            if (v == 0.0) zeros++;
        }
    }
    KeyValueFile manifest = new_manifest("genmatrix");
    manifest.set_uint("n1", n1);
    manifest.set_uint("n2", n2);
    manifest.set_uint("w", w);
    manifest.set_uint("r", r);
    manifest.set_double("p_zero", p_zero);
    manifest.set_double("a", a);
    manifest.set_double("scale", scale);
    manifest.set_uint("seed", seed);
    manifest.set("out", out);
    manifest.save(out + ".manifest");

    std::printf("%zu blocks (%zu x %zu each), m = %zu, n = %zu\n", matrix.num_blocks(), r, w,
                matrix.rows(), matrix.cols());
    std::printf("compression ratio: block w/r = %.6g, global n/m = %.6g\n",
                static_cast<double>(w) / static_cast<double>(r), matrix.compression_ratio());
    std::printf("generator zero fraction = %.4f\n",
                static_cast<double>(zeros) / static_cast<double>(entries));
    return 0;
}

int cmd_compress(const std::string& scene_dir, const std::string& matrix_path, double sigma,
                 std::uint64_t seed, bool raw, const std::string& out) {
    const Scene scene = read_scene(scene_dir);
    const SensingMatrix matrix = read_matrix(matrix_path);
    if (scene.rows() != matrix.layout().n1 || scene.cols() != matrix.layout().n2)
        throw DataFormatError("scene and matrix dimensions do not match");

    PhaseImageSet phases = simulate_phase_images(scene);
    if (sigma > 0.0) phases = add_noise(phases, sigma, seed);
    const MeasurementPair y = compress(phase_differences(phases), matrix);

    fs::create_directories(out);
    write_vector(fs::path(out) / "y_u.vec", y.y_u);
    write_vector(fs::path(out) / "y_v.vec", y.y_v);
    if (raw) {
        const std::array<const Image*, 4> imgs{&phases.p1, &phases.p2, &phases.p3, &phases.p4};
        for (std::size_t i = 0; i < 4; ++i) {
            write_vector(fs::path(out) / ("y" + std::to_string(i + 1) + ".vec"),
                         matrix.apply(imgs[i]->flat()));
        }
    }
    KeyValueFile meta;
    meta.set_double("omega", scene.omega);
    meta.set_double("emitted_amplitude", scene.emitted_amplitude);
    meta.set_double("sigma", sigma);
    meta.set_uint("seed", seed);
    meta.save(fs::path(out) / "meta.txt");

    KeyValueFile manifest = new_manifest("compress");
    manifest.set("scene", scene_dir);
    manifest.set("matrix", matrix_path);
    manifest.set_double("sigma", sigma);
    manifest.set_uint("seed", seed);
    manifest.set("raw", raw ? "1" : "0");
    manifest.set("out", out);
    manifest.save(fs::path(out) / "manifest.txt");
    std::cout << "wrote " << y.y_u.size() << " + " << y.y_v.size() << " measurements to " << out
              << " (cr = " << format_double(matrix.compression_ratio()) << ")\n";
    return 0;
}

int cmd_reconstruct(const std::string& meas_dir, const std::string& matrix_path,
                    const std::string& method_name_str, const SolverFlags& flags, bool four_phase,
                    const std::string& reference_dir, const std::string& out) {
    const ReconMethod method = parse_method(method_name_str);
    const SensingMatrix matrix = read_matrix(matrix_path);
    const SolverOptions opts = flags.resolve();
    const KeyValueFile meta = KeyValueFile::load(fs::path(meas_dir) / "meta.txt");
    const double omega = meta.get_double("omega");

    RecoveredDepth rec;
    const auto start = std::chrono::steady_clock::now();
    if (four_phase) {
        std::array<std::vector<double>, 4> ys;
        for (std::size_t i = 0; i < 4; ++i)
            ys[i] = read_vector(fs::path(meas_dir) / ("y" + std::to_string(i + 1) + ".vec"));
        rec = recover_depth_four_phase(ys, matrix, method, opts, omega);
    } else {
        const auto y_u = read_vector(fs::path(meas_dir) / "y_u.vec");
        const auto y_v = read_vector(fs::path(meas_dir) / "y_v.vec");
        rec = recover_depth(y_u, y_v, matrix, method, opts, omega);
    }
    const auto stop = std::chrono::steady_clock::now();

    fs::create_directories(out);
    write_pfm(fs::path(out) / "u_rec.pfm", rec.differences.u);
    write_pfm(fs::path(out) / "v_rec.pfm", rec.differences.v);
    write_pfm(fs::path(out) / "depth.pfm", rec.depth);
    write_mask_pgm(fs::path(out) / "mask.pgm", rec.depth.rows(), rec.depth.cols(),
                   rec.indeterminate);

    if (!reference_dir.empty()) {
        const Scene reference = read_scene(reference_dir);
        EvaluationReport row;
        row.scene = fs::path(reference_dir).filename().string();
        row.method = method_name(method);
        row.compression_ratio = matrix.compression_ratio();
        row.metrics = compute_metrics(reference.depth, rec.depth, &rec.indeterminate);
        row.iterations = rec.iterations;
        row.wall_seconds = std::chrono::duration<double>(stop - start).count();
        write_reports_csv(fs::path(out) / "report.csv", {row});
        std::printf("mae = %.6g m, rmae = %.4g %%, psnr = %.4g dB\n", row.metrics.mae,
                    row.metrics.rmae_pct, row.metrics.psnr_db);
    }

    KeyValueFile manifest = new_manifest("reconstruct");
    manifest.set("measurements", meas_dir);
    manifest.set("matrix", matrix_path);
    manifest.set("method", method_name(method));
    flags.record(manifest, opts);
    manifest.set("four_phase", four_phase ? "1" : "0");
    if (!reference_dir.empty()) manifest.set("reference", reference_dir);
    manifest.set("out", out);
    manifest.save(fs::path(out) / "manifest.txt");
    std::cout << "reconstructed " << method_name(method) << " -> " << out << " ("
              << rec.iterations << " iterations)\n";
    return 0;
}

int cmd_select(std::size_t n1, std::size_t n2, std::size_t w, std::size_t r, double p_zero, double a,
               std::size_t pool_size, std::uint64_t seed, const std::string& scenes_csv,
               const std::string& method_name_str, const SolverFlags& flags, const std::string& out) {
    const ReconMethod method = parse_method(method_name_str);
    const MatrixLayout layout{n1, n2, w};
    validate_layout(layout);
    const CandidatePool pool = make_candidate_pool(pool_size, w, r, p_zero, a, seed);

    std::vector<DifferencePair> test_images;
    for (const std::string& dir : split_list(scenes_csv)) {
        const Scene scene = read_scene(dir);
        if (scene.rows() != n1 || scene.cols() != n2)
            throw DataFormatError("test scene dimensions do not match layout: " + dir);
        test_images.push_back(scene_differences(scene));
    }
    const SolverOptions opts = flags.resolve();
    const SensingMatrix selected = select_candidates(layout, pool, test_images, method, opts, a);
    write_matrix(out, selected);

    // how often each candidate won a position
    std::vector<std::size_t> wins(pool.candidates.size(), 0);
    for (std::size_t k = 0; k < selected.num_blocks(); ++k) {
        for (std::size_t c = 0; c < pool.candidates.size(); ++c) {
            if (selected.block(k) == pool.candidates[c].spec) {
                wins[c]++;
                break;
            }
        }
    }
    for (std::size_t c = 0; c < wins.size(); ++c) {
        if (wins[c] > 0)
            std::printf("candidate %zu selected at %zu position(s)\n", c, wins[c]);
    }

    KeyValueFile manifest = new_manifest("select");
    manifest.set_uint("n1", n1);
    manifest.set_uint("n2", n2);
    manifest.set_uint("w", w);
    manifest.set_uint("r", r);
    manifest.set_double("p_zero", p_zero);
    manifest.set_double("a", a);
    manifest.set_uint("pool", pool_size);
    manifest.set_uint("seed", seed);
    manifest.set("scenes", scenes_csv);
    manifest.set("method", method_name(method));
    flags.record(manifest, flags.resolve());
    manifest.set("out", out);
    manifest.save(out + ".manifest");
    return 0;
}

int cmd_sweep(const std::string& manifest_path, int threads_override, const std::string& out) {
    const KeyValueFile spec = KeyValueFile::load(manifest_path);

    std::vector<SweepScene> scenes;
    for (const std::string& dir : split_list(spec.get("scenes"))) {
        scenes.push_back(SweepScene{fs::path(dir).filename().string(), read_scene(dir)});
    }
    std::vector<RatioSpec> ratios;
    const double default_p_zero =
        spec.has("p_zero") ? spec.get_double("p_zero") : 1.0 / 3.0;
    for (const std::string& entry : split_list(spec.get("ratios"))) {
        RatioSpec ratio;
        const auto colon = entry.find(':');
        ratio.ratio = std::stod(entry.substr(0, colon));
        ratio.p_zero = colon == std::string::npos ? default_p_zero
                                                  : std::stod(entry.substr(colon + 1));
        ratios.push_back(ratio);
    }
    std::vector<ReconMethod> methods;
    for (const std::string& name : split_list(spec.get("methods"))) methods.push_back(parse_method(name));

    SweepOptions opts;
    opts.w = spec.has("w") ? static_cast<std::size_t>(spec.get_uint("w")) : 14;
    opts.a = spec.has("a") ? spec.get_double("a") : 1.0;
    opts.noise_sigma = spec.has("sigma") ? spec.get_double("sigma") : 0.0;
    opts.seed = spec.has("seed") ? spec.get_uint("seed") : 0;
    if (spec.has("lambda")) opts.solver.fista.lambda = spec.get_double("lambda");
    if (spec.has("mu")) opts.solver.tv.mu = spec.get_double("mu");
    if (spec.has("block_size"))
        opts.solver.block_size = static_cast<std::size_t>(spec.get_uint("block_size"));
    opts.threads = spec.has("threads") ? static_cast<int>(spec.get_uint("threads")) : 1;
    if (threads_override > 0) opts.threads = threads_override;

    const SweepOutcome outcome = sweep(scenes, ratios, methods, opts);

    fs::create_directories(out);
    write_reports_csv(fs::path(out) / "report.csv", outcome.rows);
    for (const ReconMethod method : methods) {
        const auto series = method_series(outcome.rows, method_name(method));
        std::ofstream file(fs::path(out) / ("series_" + method_name(method) + ".csv"));
        file << "cr,mean_rmae_pct,mean_psnr_db,scenes\n";
        for (const auto& point : series) {
            file << format_double(point.ratio) << "," << format_double(point.mean_rmae_pct) << ","
                 << format_double(point.mean_psnr_db) << "," << point.count << "\n";
        }
    }
    for (const std::string& err : outcome.errors) std::cerr << "sweep: " << err << "\n";

    KeyValueFile manifest = new_manifest("sweep");
    for (const auto& [key, value] : spec.entries()) manifest.set(key, value);
    manifest.set("out", out);
    manifest.save(fs::path(out) / "manifest.txt");
    std::cout << "sweep wrote " << outcome.rows.size() << " rows (" << outcome.errors.size()
              << " infeasible) to " << out << "\n";
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"compressive time-of-flight imaging toolkit"};
    app.require_subcommand(1);
    app.set_version_flag("--version", std::string(kToolVersion));

    // phantom
    auto* phantom = app.add_subcommand("phantom", "generate a synthetic test scene");
    std::string ph_kind = "books", ph_out;
    std::size_t ph_n1 = 168, ph_n2 = 224;
    std::uint64_t ph_seed = 0;
    phantom->add_option("--kind", ph_kind, "books | planes | disks");
    phantom->add_option("--n1", ph_n1, "image rows")->check(CLI::PositiveNumber);
    phantom->add_option("--n2", ph_n2, "image cols")->check(CLI::PositiveNumber);
    phantom->add_option("--seed", ph_seed, "phantom seed");
    phantom->add_option("--out", ph_out, "output scene directory")->required();

    // genmatrix
    auto* genmatrix = app.add_subcommand("genmatrix", "generate a sensing matrix spec");
    std::size_t gm_n1 = 168, gm_n2 = 224, gm_w = 14, gm_r = 7;
    double gm_pzero = 1.0 / 3.0, gm_a = 1.0, gm_scale = 0.0;
    std::uint64_t gm_seed = 0;
    bool gm_compact = false;
    std::string gm_out;
    genmatrix->add_option("--n1", gm_n1, "image rows")->check(CLI::PositiveNumber);
    genmatrix->add_option("--n2", gm_n2, "image cols")->check(CLI::PositiveNumber);
    genmatrix->add_option("--w", gm_w, "row segment width (default 14)")->check(CLI::PositiveNumber);
    genmatrix->add_option("--r", gm_r, "measurements per block")->check(CLI::PositiveNumber);
    genmatrix->add_option("--p-zero", gm_pzero, "generator zero probability (default 1/3)");
    genmatrix->add_option("--a", gm_a, "generator weight magnitude (default 1)");
    genmatrix->add_option("--scale", gm_scale, "block scale (default 1/sqrt(r))");
    genmatrix->add_option("--seed", gm_seed, "matrix seed");
    genmatrix->add_flag("--compact", gm_compact, "write seeds instead of explicit entries");
    genmatrix->add_option("--out", gm_out, "output matrix file")->required();

    // compress
    auto* compress_cmd = app.add_subcommand("compress", "simulate the compressive read-out");
    std::string cp_scene, cp_matrix, cp_out;
    double cp_sigma = 0.0;
    std::uint64_t cp_seed = 0;
    bool cp_raw = false;
    compress_cmd->add_option("--scene", cp_scene, "scene directory")->required();
    compress_cmd->add_option("--matrix", cp_matrix, "matrix spec file")->required();
    compress_cmd->add_option("--sigma", cp_sigma, "phase-image noise std (default 0)");
    compress_cmd->add_option("--seed", cp_seed, "noise seed");
    compress_cmd->add_flag("--raw", cp_raw, "also write the four raw phase measurements");
    compress_cmd->add_option("--out", cp_out, "output measurement directory")->required();

    // reconstruct
    auto* reconstruct = app.add_subcommand("reconstruct", "recover differences and depth");
    std::string rc_meas, rc_matrix, rc_method, rc_reference, rc_out;
    bool rc_four_phase = false;
    SolverFlags rc_flags;
    reconstruct->add_option("--measurements", rc_meas, "measurement directory")->required();
    reconstruct->add_option("--matrix", rc_matrix, "matrix spec file")->required();
    reconstruct->add_option("--method", rc_method,
                            "fista-block | fista-global | tv-block | tv-global")
        ->required();
    rc_flags.attach(reconstruct);
    reconstruct->add_flag("--four-phase", rc_four_phase, "recover the four phase images separately");
    reconstruct->add_option("--reference", rc_reference, "reference scene directory for metrics");
    reconstruct->add_option("--out", rc_out, "output directory")->required();

    // select
    auto* select = app.add_subcommand("select", "pick measurement blocks from a candidate pool");
    std::size_t sl_n1 = 168, sl_n2 = 224, sl_w = 14, sl_r = 7, sl_pool = 20;
    double sl_pzero = 1.0 / 3.0, sl_a = 1.0;
    std::uint64_t sl_seed = 0;
    std::string sl_scenes, sl_method = "fista-block", sl_out;
    SolverFlags sl_flags;
    select->add_option("--n1", sl_n1, "image rows")->check(CLI::PositiveNumber);
    select->add_option("--n2", sl_n2, "image cols")->check(CLI::PositiveNumber);
    select->add_option("--w", sl_w, "row segment width")->check(CLI::PositiveNumber);
    select->add_option("--r", sl_r, "measurements per block")->check(CLI::PositiveNumber);
    select->add_option("--p-zero", sl_pzero, "generator zero probability");
    select->add_option("--a", sl_a, "generator weight magnitude");
    select->add_option("--pool", sl_pool, "candidate pool size")->check(CLI::PositiveNumber);
    select->add_option("--seed", sl_seed, "pool seed");
    select->add_option("--scenes", sl_scenes, "comma-separated test scene directories")->required();
    select->add_option("--method", sl_method, "scoring method (default fista-block)");
    sl_flags.attach(select);
    select->add_option("--out", sl_out, "output matrix file")->required();

    // sweep
    auto* sweep_cmd = app.add_subcommand("sweep", "compression-ratio benchmark from a manifest");
    std::string sw_manifest, sw_out;
    int sw_threads = 0;
    sweep_cmd->add_option("--manifest", sw_manifest, "sweep manifest (key = value)")->required();
    sweep_cmd->add_option("--threads", sw_threads, "override worker thread count");
    sweep_cmd->add_option("--out", sw_out, "output directory")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitArgument;
    }

    try {
        if (phantom->parsed()) return cmd_phantom(ph_kind, ph_n1, ph_n2, ph_seed, ph_out);
        if (genmatrix->parsed())
            return cmd_genmatrix(gm_n1, gm_n2, gm_w, gm_r, gm_pzero, gm_a, gm_scale, gm_seed,
                                 gm_compact, gm_out);
        if (compress_cmd->parsed())
            return cmd_compress(cp_scene, cp_matrix, cp_sigma, cp_seed, cp_raw, cp_out);
        if (reconstruct->parsed())
            return cmd_reconstruct(rc_meas, rc_matrix, rc_method, rc_flags, rc_four_phase,
                                   rc_reference, rc_out);
        if (select->parsed())
            return cmd_select(sl_n1, sl_n2, sl_w, sl_r, sl_pzero, sl_a, sl_pool, sl_seed, sl_scenes,
                              sl_method, sl_flags, sl_out);
        if (sweep_cmd->parsed()) return cmd_sweep(sw_manifest, sw_threads, sw_out);
    } catch (const ConfigError& err) {
        std::cerr << "error: " << err.what() << "\n";
        return kExitArgument;
    } catch (const DimensionError& err) {
        std::cerr << "error: " << err.what() << "\n";
        return kExitArgument;
    } catch (const DataFormatError& err) {
        std::cerr << "error: " << err.what() << "\n";
        return kExitData;
    } catch (const SolverError& err) {
        std::cerr << "error: " << err.what() << "\n";
        return kExitSolver;
    } catch (const std::exception& err) {
        std::cerr << "error: " << err.what() << "\n";
        return 1;
    }
    return 0;
}
