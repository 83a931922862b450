#pragma once

#include <stdexcept>
#include <string>

namespace slicewise {

// Input failed a structural or semantic check. Maps to CLI exit code 1.
struct ValidationError : std::runtime_error {
    explicit ValidationError(const std::string& msg) : std::runtime_error(msg) {}
};

// Filesystem-level failure (missing or unwritable file). Maps to CLI exit code 3.
struct IoError : std::runtime_error {
    explicit IoError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace slicewise
