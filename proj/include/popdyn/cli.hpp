#pragma once

#include <iosfwd>

#include "popdyn/error.hpp"

namespace popdyn::cli {

enum ExitCode : int {
  kOk = 0,
  kUsage = 2,         // parse, usage and domain errors
  kRuntime = 3,       // model or I/O failure while running
  kHypotheses = 4,    // theory does not apply to the scenario
  kVerification = 5,  // simulation disagrees with the predicted limit
};

int exit_code_for(ErrorCode code) noexcept;

/// Entry point of the `popdyn` tool. Errors go to `err` as one JSON line.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace popdyn::cli
