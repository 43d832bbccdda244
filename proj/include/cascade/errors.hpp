#pragma once

#include <stdexcept>

namespace cascade {

// Error taxonomy shared by the library and the command-line tool. The tool
// maps each class to a stable process exit code.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct DataError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct MissingSettingsError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct FitError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct EmptyWindowError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace cascade
