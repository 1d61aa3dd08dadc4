#ifndef TOFCS_MATRIX_IO_HPP
#define TOFCS_MATRIX_IO_HPP

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "tofcs/errors.hpp"
#include "tofcs/image_io.hpp"
#include "tofcs/sensing.hpp"

namespace tofcs {

// Matrix spec file:
//   tofcs-matrix v1
//   n1 n2 w a
//   k : scale : v_0 ... v_{w-1} : omega_0 ... omega_{r-1}
// or, for blocks with a recorded regeneration recipe,
//   k : compact : seed p_zero r
// The explicit form is canonical; entries are printed so they re-read
// bit-exactly.

enum class MatrixForm { explicit_entries, compact };

inline void write_matrix(const std::filesystem::path& path, const SensingMatrix& matrix,
                         MatrixForm form = MatrixForm::explicit_entries) {
    std::ofstream out(path);
    if (!out) throw DataFormatError("cannot open for writing: " + path.string());
    const auto& layout = matrix.layout();
    out << "tofcs-matrix v1\n";
    out << layout.n1 << " " << layout.n2 << " " << layout.w << " " << format_double(matrix.weight())
        << "\n";
    for (std::size_t k = 0; k < matrix.num_blocks(); ++k) {
        const auto& block = matrix.block(k);
        if (form == MatrixForm::compact) {
            if (!block.provenance)
                throw DataFormatError("compact form requires block regeneration seeds");
            out << k << " : compact : " << block.provenance->seed << " "
                << format_double(block.provenance->p_zero) << " " << block.rows() << "\n";
            continue;
        }
        out << k << " : " << format_double(block.scale) << " :";
        for (double v : block.generator) out << " " << format_double(v);
        out << " :";
        for (std::size_t idx : block.selection) out << " " << idx;
        out << "\n";
    }
    if (!out) throw DataFormatError("write failed: " + path.string());
}

inline SensingMatrix read_matrix(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw DataFormatError("cannot open: " + path.string());
    std::string line;
    if (!std::getline(in, line) || line != "tofcs-matrix v1")
        throw DataFormatError("not a matrix spec file: " + path.string());

    MatrixLayout layout;
    double a = 0.0;
    if (!std::getline(in, line)) throw DataFormatError("truncated matrix spec: " + path.string());
    {
        std::istringstream header(line);
        if (!(header >> layout.n1 >> layout.n2 >> layout.w >> a))
            throw DataFormatError("bad matrix header: " + path.string());
    }
    validate_layout(layout);

    std::vector<CirculantBlockSpec> blocks;
    blocks.reserve(layout.num_blocks());
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::vector<std::string> fields;
        std::size_t start = 0;
        for (;;) {
            const auto pos = line.find(':', start);
            fields.push_back(line.substr(start, pos == std::string::npos ? pos : pos - start));
            if (pos == std::string::npos) break;
            start = pos + 1;
        }
        if (fields.size() < 3) throw DataFormatError("bad block line: " + line);

        std::istringstream head(fields[0]);
        std::size_t k = 0;
        if (!(head >> k) || k != blocks.size())
            throw DataFormatError("block indices must be 0..K-1 in order: " + line);

        std::istringstream second(fields[1]);
        std::string tag;
        second >> tag;
        if (tag == "compact") {
            std::istringstream body(fields[2]);
            std::uint64_t seed = 0;
            double p_zero = 0.0;
            std::size_t r = 0;
            if (!(body >> seed >> p_zero >> r)) throw DataFormatError("bad compact block: " + line);
            blocks.push_back(sample_block_spec(layout.w, r, p_zero, a, seed));
        } else {
            if (fields.size() != 4) throw DataFormatError("bad block line: " + line);
            CirculantBlockSpec spec;
            spec.scale = std::stod(tag);
            std::istringstream gen(fields[2]);
            double v = 0.0;
            while (gen >> v) spec.generator.push_back(v);
            if (spec.generator.size() != layout.w)
                throw DataFormatError("generator length != w: " + line);
            std::istringstream sel(fields[3]);
            std::size_t idx = 0;
            while (sel >> idx) spec.selection.push_back(idx);
            blocks.push_back(std::move(spec));
        }
    }
    if (blocks.size() != layout.num_blocks())
        throw DataFormatError("matrix spec: block count does not tile the image");
    try {
        return SensingMatrix(layout, std::move(blocks), a);
    } catch (const ConfigError& err) {
        throw DataFormatError(std::string("invalid matrix spec: ") + err.what());
    }
}

} // namespace tofcs

#endif
