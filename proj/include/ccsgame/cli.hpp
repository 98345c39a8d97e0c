#pragma once
// Command-line front end. run_cli is the whole program minus process exit;
// tests drive it in-process with captured streams. Exit codes: 0 pass,
// 1 fail, 2 inconclusive, 3 usage error.

#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

namespace ccsgame::cli {

// The accept subcommand delegates to this hook (the acceptance suite lives
// in a separate library layered above the engine); it returns the number of
// failed criteria.
using AcceptHook = std::function<int(std::ostream&)>;

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err,
            const AcceptHook& accept = {});

}  // namespace ccsgame::cli
