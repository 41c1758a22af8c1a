#pragma once

#include <chrono>
#include <filesystem>
#include <string>
#include <vector>

namespace scenegeo {

struct ProcessResult {
  int exit_code = -1;  // -1 when killed by a signal or on timeout
  bool timed_out = false;
  std::string stdout_text;
  std::string stderr_text;
};

/// Runs argv[0] (looked up on PATH) with the remaining arguments, capturing
/// stdout/stderr into files under `log_dir`. The whole process group is killed
/// when `timeout` elapses. Throws ProtocolError(LaunchFailed) if the program
/// cannot be started.
ProcessResult run_process(const std::vector<std::string>& argv, std::chrono::duration<double> timeout,
                          const std::filesystem::path& log_dir);

/// Whitespace split with single/double quote grouping; no other shell semantics.
std::vector<std::string> split_command(const std::string& command);

}  // namespace scenegeo
