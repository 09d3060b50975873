#pragma once

namespace synct {

// Entry point of the command-line tool. Exit codes: 0 success, 1 usage error,
// 2 runtime failure.
int run_cli(int argc, const char* const* argv);

}  // namespace synct
