#ifndef TOFCS_ERRORS_HPP
#define TOFCS_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace tofcs {

/// Mismatched vector/image shapes.
struct DimensionError : std::invalid_argument {
    explicit DimensionError(const std::string& what) : std::invalid_argument(what) {}
};

/// Invalid configuration value (step sizes, probabilities, geometry).
struct ConfigError : std::invalid_argument {
    explicit ConfigError(const std::string& what) : std::invalid_argument(what) {}
};

/// Malformed or unreadable data file.
struct DataFormatError : std::runtime_error {
    explicit DataFormatError(const std::string& what) : std::runtime_error(what) {}
};

/// Solver could not produce a result.
struct SolverError : std::runtime_error {
    explicit SolverError(const std::string& what) : std::runtime_error(what) {}
};

} // namespace tofcs

#endif
