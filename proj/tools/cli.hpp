#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace mwthermo::cli {

enum ExitCode : int
{
    exit_ok = 0,
    exit_config = 2,
    exit_io = 3,
    exit_convergence = 4,
    exit_range = 5,
};

/// Runs one invocation; args exclude the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

} // namespace mwthermo::cli
