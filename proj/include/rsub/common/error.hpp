#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace rsub {

enum class ErrorKind {
  kContract,
  kNumericDomain,
  kDegenerateBasis,
  kContextLength,
  kSaturation,
  kDatasetIntegrity,
  kDivergence,
  kFormatVersion,
  kFormatShape,
  kFormatTruncated,
  kFormatChecksum,
  kIo,
  kUsage,
  kDependency,
  kTransfer,
};

std::string_view to_string(ErrorKind kind);

/// Exit status used by the CLI for an error of this kind.
int exit_code(ErrorKind kind);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message);

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] void fail(ErrorKind kind, const std::string& message);

inline void require(bool condition, ErrorKind kind, const std::string& message) {
  if (!condition) fail(kind, message);
}

}  // namespace rsub
