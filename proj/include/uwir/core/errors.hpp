#pragma once
// Error taxonomy shared by every module. The CLI maps these to exit codes.

#include <stdexcept>
#include <string>

namespace uwir {

// Bad arguments, bad config values, malformed data, violated preconditions.
struct InvalidInput : std::runtime_error {
  explicit InvalidInput(const std::string& msg) : std::runtime_error(msg) {}
};

// Filesystem and subprocess failures.
struct IoError : std::runtime_error {
  explicit IoError(const std::string& msg) : std::runtime_error(msg) {}
};

// Corrupt or truncated checkpoint payload.
struct ChecksumError : IoError {
  explicit ChecksumError(const std::string& msg) : IoError(msg) {}
};

// Checkpoint written by an incompatible format revision.
struct VersionError : IoError {
  explicit VersionError(const std::string& msg) : IoError(msg) {}
};

// External depth command failed; carries captured diagnostics.
struct ProviderError : std::runtime_error {
  explicit ProviderError(const std::string& msg) : std::runtime_error(msg) {}
};

// Stage ordering violated: stage two work without a loaded stage-one state.
struct StagingError : InvalidInput {
  explicit StagingError(const std::string& msg) : InvalidInput(msg) {}
};

}  // namespace uwir
