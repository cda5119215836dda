#pragma once

#include <string>
#include <vector>

namespace codecause {

struct CommandResult {
  int exit_code = -1;
  std::string out;
};

/// Runs argv[0] from PATH without a shell, capturing stdout. stderr is discarded.
CommandResult run_command(const std::vector<std::string>& argv);

}  // namespace codecause
