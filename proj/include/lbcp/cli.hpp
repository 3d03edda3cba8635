#pragma once

#include <iosfwd>

namespace lbcp {

/// Exit codes: 0 success, 1 user error (flags, files, data), 2 numeric failure.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace lbcp
