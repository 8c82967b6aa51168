#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace cllac {

/// Bad arguments: wrong dimensions, empty inputs, out-of-range scalars.
class InvalidInput : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A structurally valid request that violates a risk/loss pairing rule,
/// e.g. cl_symmetric with a non-symmetric loss.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed binary input. `offset` is the byte position where parsing failed.
class FormatError : public std::runtime_error {
 public:
  FormatError(const std::string& what, std::uint64_t offset)
      : std::runtime_error(what + " (at byte " + std::to_string(offset) + ")"),
        offset_(offset) {}

  std::uint64_t offset() const noexcept { return offset_; }

 private:
  std::uint64_t offset_;
};

class VerificationFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Process exit codes used by the command-line tool.
enum class ExitCode : int {
  ok = 0,
  usage = 1,
  format = 2,
  divergence = 3,
  verification = 4,
};

}  // namespace cllac
