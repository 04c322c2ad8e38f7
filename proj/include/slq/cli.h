#pragma once

#include <iosfwd>
#include <string>

#include "slq/optimize.h"

namespace slq {

/// Process exit codes of the slq_pg tool.
enum ExitCode : int {
  kExitOk = 0,
  kExitNegative = 1,    // not a stabilizer, no convergence, violated check
  kExitValidation = 2,  // bad document, flags or unsupported model
  kExitNumerical = 3,   // singular operator, step collapse, overflow
};

inline constexpr const char* kTraceHeader =
    "iter,cost,grad_norm_fro,step_size,rel_error";

/// Writes the header and one row per record. Reals use 17 significant
/// digits in scientific notation; rel_error is empty without an oracle.
void write_trace_csv(const DescentReport& report, std::ostream& out);

/// Runs the command line in-process. `argv[0]` is the program name.
int run_cli(int argc, const char* const* argv, std::ostream& out,
            std::ostream& err);

}  // namespace slq
