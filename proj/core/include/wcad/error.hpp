#pragma once

#include <stdexcept>
#include <string>

namespace wcad {

// Error categories map onto CLI exit codes: ConfigError -> 2, IoError -> 3,
// NumericError -> 4. ShapeError is a programming/contract violation surfaced
// with the offending dimension in the message.
struct ShapeError : std::runtime_error {
    explicit ShapeError(const std::string& msg) : std::runtime_error(msg) {}
};

struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

struct IoError : std::runtime_error {
    explicit IoError(const std::string& msg) : std::runtime_error(msg) {}
};

struct NumericError : std::runtime_error {
    explicit NumericError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace wcad
