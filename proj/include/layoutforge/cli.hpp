#pragma once

#include <iosfwd>

namespace layoutforge {

// Entry point of the `layoutforge` tool. Returns the process exit code:
// 0 success (generate: solved), 2 generate unsolved or a failed psf check,
// 1 any error.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace layoutforge
