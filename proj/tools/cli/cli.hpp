#pragma once

#include <iosfwd>

namespace flowqa::cli {

enum ExitCode : int {
  kExitOk = 0,
  kExitUsage = 1,
  kExitIo = 2,
  kExitComputation = 3,
};

// Entry point shared by the executable and the tests. Output files are written directly;
// reports and summaries go to `out`, diagnostics to `err`.
int Run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace flowqa::cli
