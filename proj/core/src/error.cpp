#include "flowqa/error.hpp"

namespace flowqa {

const char* ErrorKindName(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kUsage: return "usage";
    case ErrorKind::kIo: return "io";
    case ErrorKind::kFormat: return "format";
    case ErrorKind::kTruncated: return "truncated";
    case ErrorKind::kUnsupported: return "unsupported";
    case ErrorKind::kShape: return "shape";
    case ErrorKind::kArgument: return "argument";
    case ErrorKind::kDegenerate: return "degenerate";
    case ErrorKind::kComputation: return "computation";
  }
  return "unknown";
}

}  // namespace flowqa
