#pragma once

#include <stdexcept>
#include <string>

namespace maskmix {

// Shape/argument violations. The CLI maps these to exit code 2.
struct ShapeError : std::invalid_argument {
    explicit ShapeError(const std::string& what) : std::invalid_argument(what) {}
};

// Non-finite values, zero-norm inputs and the like. CLI exit code 3.
struct NumericError : std::runtime_error {
    explicit NumericError(const std::string& what) : std::runtime_error(what) {}
};

// Artifacts that do not belong together (layout hash, world digest). CLI exit code 4.
struct MismatchError : std::runtime_error {
    explicit MismatchError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace maskmix
