#pragma once

#include <iosfwd>

namespace grandag::cli {

// Entry point of the `grandag` tool. Results go to `out`; errors are
// written to `err` as one JSON object. Returns the process exit code:
// 0 on success, 1 for runtime errors, 2 for usage errors.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace grandag::cli
