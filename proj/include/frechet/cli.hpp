#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace frechet {

/// Process exit codes of the command-line front end.
enum ExitCode : int {
    kExitOk = 0,
    kExitConfig = 1,
    kExitInfeasible = 2,
    kExitNotMixable = 3,
    kExitUndecided = 4,
};

/// Run one command. `args` excludes the program name. The configuration is
/// read from --config PATH, or from `in` when the flag is absent or "-".
/// Results go to `out` as JSON; diagnostics go to `err`.
int run_cli(const std::vector<std::string>& args, std::istream& in, std::ostream& out, std::ostream& err);

}  // namespace frechet
