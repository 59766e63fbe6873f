#pragma once

#include <stdexcept>
#include <string>

namespace fedcarbon {

/// Invalid configuration or precondition violation detected at setup time.
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Dimension mismatch between tensors, samples, or model layers.
struct ShapeError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Non-finite value produced during numeric computation.
struct NumericError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Malformed or incomplete input file.
struct IngestError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// A supposedly-impossible internal state; indicates a bug upstream.
struct InvariantError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

}  // namespace fedcarbon
