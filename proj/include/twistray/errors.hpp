#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace twistray {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Expression text could not be parsed; `position` is a 0-based byte offset.
struct SyntaxError : Error {
    SyntaxError(const std::string& what, std::size_t position)
        : Error(what + " at position " + std::to_string(position)), position(position) {}
    std::size_t position;
};

// log of a nonpositive value, sqrt of a negative value, etc.
struct EvalError : Error {
    using Error::Error;
};

struct ConfigError : Error {
    using Error::Error;
};

// A geometric precondition failed (point not on boundary, vanishing
// gradient, tangent not tangent, ...).
struct GeometryError : Error {
    using Error::Error;
};

// An operation needed an exiting ray but tracing ended trapped/tangential.
struct TraceError : Error {
    using Error::Error;
};

}  // namespace twistray
