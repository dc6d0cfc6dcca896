#pragma once

#include <stdexcept>
#include <string>

namespace flowqa {

enum class ErrorKind {
  kUsage,        // bad arguments supplied by the caller
  kIo,           // file missing or unreadable
  kFormat,       // malformed container / header
  kTruncated,    // payload shorter than the header promises
  kUnsupported,  // well-formed but outside the supported subset
  kShape,        // mismatched dimensions
  kArgument,     // precondition violated on a value
  kDegenerate,   // input admits no meaningful answer
  kComputation,  // numerical failure
};

const char* ErrorKindName(ErrorKind kind);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void Fail(ErrorKind kind, const std::string& what) { throw Error(kind, what); }

}  // namespace flowqa
