#pragma once

#include <stdexcept>

namespace nfdoa {

// Config parse/validation problems; the CLI maps these to exit code 2.
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Numerical failures (solver non-convergence, divergence); exit code 3.
struct NumericError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Filesystem problems; exit code 4.
struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

} // namespace nfdoa
