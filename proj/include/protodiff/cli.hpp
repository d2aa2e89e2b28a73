#pragma once

#include <iosfwd>

namespace protodiff {

// Exit codes: 0 success or PASS, 1 parse/IO or solver error, 2 MISMATCH,
// 3 HYPOTHESIS_VIOLATED.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace protodiff
