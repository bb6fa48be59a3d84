#pragma once

#include "medaudit/error.hpp"
#include "medaudit/json.hpp"

#include <ostream>
#include <string>

namespace medaudit {

inline constexpr const char* kToolName = "medaudit";
inline constexpr const char* kToolVersion = "0.1.0";

// 0 success, 1 internal error, 2 input or schema error, 3 empty or degenerate data.
int exit_code_for(ErrorKind kind);

// Each command takes a run config (the JSON echoed into its artifacts as
// "run_config"), fills in defaults, writes its files, and returns a summary.
// Passing an artifact's run_config back reproduces the artifact.
Json cmd_ingest(const Json& config);
Json cmd_estimate(const Json& config);
Json cmd_sensitivity(const Json& config);
Json cmd_paths(const Json& config);
Json cmd_simulate(const Json& config);

// Accepts a plain config or any artifact carrying "run_config".
Json extract_run_config(const Json& document);

// Dispatches by name, prints the summary to `out` and diagnostics to `err`,
// and maps failures to exit codes.
int run_command(const std::string& command, const Json& config, std::ostream& out, std::ostream& err);

}  // namespace medaudit
