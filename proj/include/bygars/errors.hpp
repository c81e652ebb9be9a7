#pragma once

#include <stdexcept>
#include <string>

namespace bygars {

// Invalid configuration (bad schema, impossible sizes, unknown keys).
// Maps to CLI exit code 1.
struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

// Failure while executing a run (numerical corruption, aborted iteration).
// Maps to CLI exit code 2.
struct SimError : std::runtime_error {
    explicit SimError(const std::string& msg) : std::runtime_error(msg) {}
};

} // namespace bygars
