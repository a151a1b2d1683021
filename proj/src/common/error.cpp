#include "rsub/common/error.hpp"

namespace rsub {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kContract: return "contract_violation";
    case ErrorKind::kNumericDomain: return "numeric_domain";
    case ErrorKind::kDegenerateBasis: return "degenerate_basis";
    case ErrorKind::kContextLength: return "context_length";
    case ErrorKind::kSaturation: return "saturation";
    case ErrorKind::kDatasetIntegrity: return "dataset_integrity";
    case ErrorKind::kDivergence: return "divergence";
    case ErrorKind::kFormatVersion: return "format_version";
    case ErrorKind::kFormatShape: return "format_shape";
    case ErrorKind::kFormatTruncated: return "format_truncated";
    case ErrorKind::kFormatChecksum: return "format_checksum";
    case ErrorKind::kIo: return "io";
    case ErrorKind::kUsage: return "usage";
    case ErrorKind::kDependency: return "dependency";
    case ErrorKind::kTransfer: return "transfer";
  }
  return "unknown";
}

int exit_code(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kUsage: return 2;
    case ErrorKind::kDependency: return 3;
    case ErrorKind::kNumericDomain:
    case ErrorKind::kDivergence:
    case ErrorKind::kDegenerateBasis: return 4;
    case ErrorKind::kIo:
    case ErrorKind::kFormatVersion:
    case ErrorKind::kFormatShape:
    case ErrorKind::kFormatTruncated:
    case ErrorKind::kFormatChecksum: return 5;
    default: return 1;
  }
}

Error::Error(ErrorKind kind, const std::string& message)
    : std::runtime_error(std::string(to_string(kind)) + ": " + message), kind_(kind) {}

void fail(ErrorKind kind, const std::string& message) { throw Error(kind, message); }

}  // namespace rsub
