#pragma once

#include <stdexcept>
#include <string>

namespace amdnet {

/// Tensor/layer dimension disagreement.
struct ShapeError : std::runtime_error {
    explicit ShapeError(const std::string& msg) : std::runtime_error("shape error: " + msg) {}
};

/// Invalid configuration value or file.
struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& msg) : std::runtime_error("config error: " + msg) {}
};

/// Malformed input data (labels, colorspace tags, ...).
struct ValidationError : std::runtime_error {
    explicit ValidationError(const std::string& msg) : std::runtime_error("validation error: " + msg) {}
};

/// Operation called outside its stated preconditions.
struct PreconditionError : std::runtime_error {
    explicit PreconditionError(const std::string& msg) : std::runtime_error("precondition error: " + msg) {}
};

/// File system / decode failures.
struct IoError : std::runtime_error {
    explicit IoError(const std::string& msg) : std::runtime_error("io error: " + msg) {}
};

/// Corrupt or incompatible checkpoint.
struct CheckpointError : std::runtime_error {
    explicit CheckpointError(const std::string& msg) : std::runtime_error("checkpoint error: " + msg) {}
};

/// Missing model/checkpoint state for the requested operation.
struct StateError : std::runtime_error {
    explicit StateError(const std::string& msg) : std::runtime_error("state error: " + msg) {}
};

/// Non-finite values where finite math is required (training aborts).
struct NumericError : std::runtime_error {
    explicit NumericError(const std::string& msg) : std::runtime_error("numeric error: " + msg) {}
};

}  // namespace amdnet
