#ifndef TOFCS_IMAGE_IO_HPP
#define TOFCS_IMAGE_IO_HPP

#include <bit>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "tofcs/errors.hpp"
#include "tofcs/image.hpp"
#include "tofcs/tof_model.hpp"

namespace tofcs {

/// Shortest decimal form that round-trips a double exactly.
inline std::string format_double(double x) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", x);
    return buf;
}

// ---------------------------------------------------------------------------
// PFM: grayscale float images, scale -1.0 (little-endian), rows bottom-up.
// ---------------------------------------------------------------------------

inline void write_pfm(const std::filesystem::path& path, const Image& img) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataFormatError("cannot open for writing: " + path.string());
    out << "Pf\n" << img.cols() << " " << img.rows() << "\n-1.0\n";
    for (std::size_t i = img.rows(); i-- > 0;) {
        std::vector<float> row(img.cols());
        for (std::size_t j = 0; j < img.cols(); ++j) row[j] = static_cast<float>(img.at(i, j));
        out.write(reinterpret_cast<const char*>(row.data()),
                  static_cast<std::streamsize>(row.size() * sizeof(float)));
    }
    if (!out) throw DataFormatError("write failed: " + path.string());
}

inline Image read_pfm(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataFormatError("cannot open: " + path.string());
    std::string magic;
    in >> magic;
    if (magic != "Pf") throw DataFormatError("not a grayscale PFM: " + path.string());
    std::size_t cols = 0, rows = 0;
    double scale = 0.0;
    in >> cols >> rows >> scale;
    if (!in || cols == 0 || rows == 0 || scale == 0.0)
        throw DataFormatError("bad PFM header: " + path.string());
    in.get(); // single whitespace after the header
    const bool little_endian = scale < 0.0;
    Image img(rows, cols);
    std::vector<float> row(cols);
    for (std::size_t i = rows; i-- > 0;) {
        in.read(reinterpret_cast<char*>(row.data()),
                static_cast<std::streamsize>(cols * sizeof(float)));
        if (!in) throw DataFormatError("truncated PFM data: " + path.string());
        for (std::size_t j = 0; j < cols; ++j) {
            float v = row[j];
            if (little_endian != (std::endian::native == std::endian::little)) {
                auto bits = std::bit_cast<std::uint32_t>(v);
                bits = ((bits & 0xff) << 24) | ((bits & 0xff00) << 8) | ((bits >> 8) & 0xff00) |
                       (bits >> 24);
                v = std::bit_cast<float>(bits);
            }
            img.at(i, j) = v;
        }
    }
    return img;
}

// ---------------------------------------------------------------------------
// 16-bit PGM with an affine quantization recorded in a ".range" sidecar.
// ---------------------------------------------------------------------------

inline void write_pgm16(const std::filesystem::path& path, const Image& img) {
    double lo = img.size() ? img[0] : 0.0, hi = lo;
    for (double v : img.flat()) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataFormatError("cannot open for writing: " + path.string());
    out << "P5\n" << img.cols() << " " << img.rows() << "\n65535\n";
    const double span = hi - lo;
    for (double v : img.flat()) {
        const double t = span > 0.0 ? (v - lo) / span : 0.0;
        const auto q = static_cast<std::uint16_t>(std::lround(t * 65535.0));
        const unsigned char bytes[2] = {static_cast<unsigned char>(q >> 8),
                                        static_cast<unsigned char>(q & 0xff)};
        out.write(reinterpret_cast<const char*>(bytes), 2);
    }
    std::ofstream side(path.string() + ".range");
    side << format_double(lo) << " " << format_double(hi) << "\n";
    if (!out || !side) throw DataFormatError("write failed: " + path.string());
}

inline Image read_pgm16(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataFormatError("cannot open: " + path.string());
    std::string magic;
    std::size_t cols = 0, rows = 0, maxval = 0;
    in >> magic >> cols >> rows >> maxval;
    if (magic != "P5" || maxval != 65535 || cols == 0 || rows == 0)
        throw DataFormatError("not a 16-bit PGM: " + path.string());
    in.get();
    std::ifstream side(path.string() + ".range");
    double lo = 0.0, hi = 0.0;
    if (!(side >> lo >> hi)) throw DataFormatError("missing range sidecar: " + path.string());
    Image img(rows, cols);
    for (std::size_t i = 0; i < img.size(); ++i) {
        unsigned char bytes[2];
        in.read(reinterpret_cast<char*>(bytes), 2);
        if (!in) throw DataFormatError("truncated PGM data: " + path.string());
        const double q = bytes[0] * 256.0 + bytes[1];
        img[i] = lo + q / 65535.0 * (hi - lo);
    }
    return img;
}

/// 8-bit PGM for binary masks (0 / 255).
inline void write_mask_pgm(const std::filesystem::path& path, std::size_t rows, std::size_t cols,
                           const std::vector<std::uint8_t>& mask) {
    if (mask.size() != rows * cols) throw DimensionError("mask size mismatch");
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataFormatError("cannot open for writing: " + path.string());
    out << "P5\n" << cols << " " << rows << "\n255\n";
    for (std::uint8_t v : mask) out.put(v ? static_cast<char>(255) : 0);
    if (!out) throw DataFormatError("write failed: " + path.string());
}

// ---------------------------------------------------------------------------
// Plain measurement vectors.
// ---------------------------------------------------------------------------

inline void write_vector(const std::filesystem::path& path, std::span<const double> v) {
    std::ofstream out(path);
    if (!out) throw DataFormatError("cannot open for writing: " + path.string());
    out << "tofcs-vec v1\n" << v.size() << "\n";
    for (double x : v) out << format_double(x) << "\n";
    if (!out) throw DataFormatError("write failed: " + path.string());
}

inline std::vector<double> read_vector(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw DataFormatError("cannot open: " + path.string());
    std::string tag, version;
    in >> tag >> version;
    if (tag != "tofcs-vec" || version != "v1") throw DataFormatError("not a vector file: " + path.string());
    std::size_t count = 0;
    in >> count;
    std::vector<double> v(count);
    for (std::size_t i = 0; i < count; ++i) {
        if (!(in >> v[i])) throw DataFormatError("truncated vector file: " + path.string());
    }
    return v;
}

// ---------------------------------------------------------------------------
// key = value text files (configs, manifests, scene metadata).
// ---------------------------------------------------------------------------

/// Ordered key = value document. Writing preserves insertion order so
/// identical runs produce identical bytes.
class KeyValueFile {
public:
    void set(const std::string& key, const std::string& value) {
        for (auto& [k, v] : entries_) {
            if (k == key) {
                v = value;
                return;
            }
        }
        entries_.emplace_back(key, value);
    }

    void set_double(const std::string& key, double value) { set(key, format_double(value)); }
    void set_uint(const std::string& key, std::uint64_t value) { set(key, std::to_string(value)); }

    bool has(const std::string& key) const {
        for (const auto& [k, v] : entries_)
            if (k == key) return true;
        return false;
    }

    const std::string& get(const std::string& key) const {
        for (const auto& [k, v] : entries_)
            if (k == key) return v;
        throw DataFormatError("missing key: " + key);
    }

    std::string get_or(const std::string& key, const std::string& fallback) const {
        return has(key) ? get(key) : fallback;
    }

    double get_double(const std::string& key) const {
        const std::string& s = get(key);
        std::size_t pos = 0;
        const double v = std::stod(s, &pos);
        if (pos != s.size()) throw DataFormatError("not a number: " + key + " = " + s);
        return v;
    }

    std::uint64_t get_uint(const std::string& key) const {
        return static_cast<std::uint64_t>(std::stoull(get(key)));
    }

    const std::vector<std::pair<std::string, std::string>>& entries() const { return entries_; }

    void save(const std::filesystem::path& path) const {
        std::ofstream out(path);
        if (!out) throw DataFormatError("cannot open for writing: " + path.string());
        for (const auto& [k, v] : entries_) out << k << " = " << v << "\n";
        if (!out) throw DataFormatError("write failed: " + path.string());
    }

    static KeyValueFile load(const std::filesystem::path& path) {
        std::ifstream in(path);
        if (!in) throw DataFormatError("cannot open: " + path.string());
        KeyValueFile kv;
        std::string line;
        while (std::getline(in, line)) {
            const auto hash = line.find('#');
            if (hash != std::string::npos) line.erase(hash);
            const auto eq = line.find('=');
            if (eq == std::string::npos) continue;
            auto trim = [](std::string s) {
                const auto b = s.find_first_not_of(" \t\r");
                const auto e = s.find_last_not_of(" \t\r");
                return b == std::string::npos ? std::string{} : s.substr(b, e - b + 1);
            };
            const std::string key = trim(line.substr(0, eq));
            const std::string value = trim(line.substr(eq + 1));
            if (!key.empty()) kv.set(key, value);
        }
        return kv;
    }

private:
    std::vector<std::pair<std::string, std::string>> entries_;
};

// ---------------------------------------------------------------------------
// Scene directories: depth/amplitude/offset images plus metadata.
// ---------------------------------------------------------------------------

inline void write_scene(const std::filesystem::path& dir, const Scene& scene,
                        std::uint64_t seed = 0, const std::string& kind = "") {
    std::filesystem::create_directories(dir);
    write_pfm(dir / "depth.pfm", scene.depth);
    write_pfm(dir / "amplitude.pfm", scene.amplitude);
    write_pfm(dir / "offset.pfm", scene.offset);
    KeyValueFile meta;
    meta.set_double("omega", scene.omega);
    meta.set_double("emitted_amplitude", scene.emitted_amplitude);
    meta.set_uint("seed", seed);
    if (!kind.empty()) meta.set("kind", kind);
    meta.save(dir / "scene.txt");
}

inline Scene read_scene(const std::filesystem::path& dir) {
    Scene scene;
    scene.depth = read_pfm(dir / "depth.pfm");
    scene.amplitude = read_pfm(dir / "amplitude.pfm");
    scene.offset = read_pfm(dir / "offset.pfm");
    const KeyValueFile meta = KeyValueFile::load(dir / "scene.txt");
    scene.omega = meta.get_double("omega");
    scene.emitted_amplitude = meta.get_double("emitted_amplitude");
    validate_scene(scene);
    return scene;
}

} // namespace tofcs

#endif
