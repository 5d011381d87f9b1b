#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace nhk::cli {

enum ExitCode : int { kOk = 0, kVerificationFailed = 1, kUsage = 2, kRuntime = 3 };

/// Runs `nhk` with the given arguments (program name excluded). Payloads go
/// to `out`, diagnostics and usage text to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace nhk::cli
