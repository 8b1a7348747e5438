#pragma once

#include <stdexcept>
#include <string>

namespace takd {

/// I/O failures: missing files, bad magic, truncated or malformed payloads.
struct io_error : std::runtime_error {
    explicit io_error(const std::string& what) : std::runtime_error(what) {}
};

/// Configuration failures: unknown keys, out-of-range values, shape mismatches.
struct config_error : std::runtime_error {
    explicit config_error(const std::string& what) : std::runtime_error(what) {}
};

/// Numeric failures: indefinite matrices where PSD is required, degenerate
/// calibrations, non-finite intermediates.
struct numeric_error : std::runtime_error {
    explicit numeric_error(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace takd
