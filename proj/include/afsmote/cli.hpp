#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace afsmote {

/// Exit codes: 0 success, 1 usage, 2 data, 3 runtime. theorem-check also
/// returns 3 when the checks do not pass.
int run_cli(int argc, char** argv);

/// Same, with `args` excluding the program name. Results go to `out`,
/// diagnostics to `err`.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace afsmote
