#pragma once

#include <string>
#include <vector>

namespace tk::cli {

// Entry point behind the `tk` binary. Returns the process exit code;
// failures print a diagnostic on stderr and return nonzero.
int run(int argc, const char* const* argv);

// Convenience for tests.
int run(const std::vector<std::string>& args);

} // namespace tk::cli
