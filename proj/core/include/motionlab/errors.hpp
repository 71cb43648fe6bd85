#pragma once

#include <stdexcept>
#include <string>

namespace motionlab {

// Base class for all library errors.
struct Error : std::runtime_error {
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Shape or dimension disagreement between operands.
struct DimensionError : Error {
    explicit DimensionError(const std::string& msg) : Error(msg) {}
};

// API contract violation (non-scalar backward output, bad argument, ...).
struct ContractError : Error {
    explicit ContractError(const std::string& msg) : Error(msg) {}
};

// Numerical failure: NaN/Inf, degenerate input, singular configuration.
struct NumericError : Error {
    explicit NumericError(const std::string& msg) : Error(msg) {}
};

// Malformed or truncated file content; message names the byte offset.
struct ParseError : Error {
    explicit ParseError(const std::string& msg) : Error(msg) {}
};

// Filesystem-level failure (unreadable/unwritable path).
struct IoError : Error {
    explicit IoError(const std::string& msg) : Error(msg) {}
};

}  // namespace motionlab
