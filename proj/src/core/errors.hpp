#pragma once

#include <stdexcept>

namespace usjepa {

// Invalid or inconsistent run configuration (CLI exit code 2).
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// File system or file format failure.
struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace usjepa
