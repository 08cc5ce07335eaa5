#pragma once

#include <iosfwd>

namespace spectralab {

/// Entry point of the `spectralab` tool. Returns 0 on success, 1 on a runtime
/// failure (one-line diagnostic on `err`), 2 on a usage error.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace spectralab
