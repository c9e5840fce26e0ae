#pragma once

#include "igabem/config.hpp"
#include "igabem/core.hpp"

#include <string>

namespace igabem {

/// Exit codes of the pipeline: 0 ok, 1 config, 2 mesher, 3 assembly, 4 solver.
enum ExitCode {
  kOk = 0,
  kConfigError = 1,
  kMesherError = 2,
  kAssemblyError = 3,
  kSolverError = 4,
};

struct RunOutcome {
  int exit_code = kOk;
  std::string message;
};

/// Full pipeline: geometry, collocation, mesher, precompute (cached), solve,
/// outputs (VTK, monitor CSV, run log) into the configured directory.
RunOutcome run_pipeline(const RunConfig& config);

/// Mesher only: generates the cell mesh and dumps it as VTK.
RunOutcome run_mesh_only(const RunConfig& config);

/// Re-emits outputs from the cached solution state of a previous run.
RunOutcome run_report(const RunConfig& config);

}  // namespace igabem
