#pragma once

#include <string>
#include <vector>

namespace specdiff {

// Entry point behind the `specdiff` binary. Exit codes: 0 success,
// 1 verify failure, 2 usage/config, 3 I/O, 4 training divergence,
// 5 checkpoint load failure.
int run_cli(const std::vector<std::string>& args);

}  // namespace specdiff
