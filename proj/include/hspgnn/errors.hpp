#ifndef HSPGNN_ERRORS_HPP
#define HSPGNN_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace hspgnn {

// Error taxonomy. Everything derives from Error so callers can catch the
// whole family at a boundary (the CLI turns them into JSON error objects).
struct Error : std::runtime_error {
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Operand shapes do not line up.
struct DimensionError : Error {
    explicit DimensionError(const std::string& msg) : Error(msg) {}
};

// A static setting is out of its legal range (kernel width, decay rate, ...).
struct ConfigurationError : Error {
    explicit ConfigurationError(const std::string& msg) : Error(msg) {}
};

// An API precondition was violated (wrong Laplacian kind, untrained model, ...).
struct ContractError : Error {
    explicit ContractError(const std::string& msg) : Error(msg) {}
};

// Bad input data: negative weights, empty mask support, window too short.
struct ValidationError : Error {
    explicit ValidationError(const std::string& msg) : Error(msg) {}
};

// NaN/Inf encountered, or a solve failed numerically.
struct NumericError : Error {
    explicit NumericError(const std::string& msg) : Error(msg) {}
};

// A normalizing flow lost invertibility.
struct DegeneracyError : Error {
    explicit DegeneracyError(const std::string& msg) : Error(msg) {}
};

// Malformed input file.
struct ParseError : Error {
    explicit ParseError(const std::string& msg) : Error(msg) {}
};

// Checkpoint could not be read back.
struct LoadError : Error {
    explicit LoadError(const std::string& msg) : Error(msg) {}
};

struct IoError : Error {
    explicit IoError(const std::string& msg) : Error(msg) {}
};

}  // namespace hspgnn

#endif
