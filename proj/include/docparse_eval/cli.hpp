#pragma once

// Command-line driver. Exit status: 0 success, 1 input error, 2 internal
// error. Reports go to `out`, diagnostics to `err`.

#include <ostream>

namespace docparse_eval {

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace docparse_eval
