#pragma once

#include <stdexcept>
#include <string>

namespace stride {

// Bad input data or configuration: maps to CLI exit code 2.
struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

// Everything else that stops a run: maps to CLI exit code 1.
struct RuntimeError : std::runtime_error {
    explicit RuntimeError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace stride
