#include <iostream>
#include <string>
#include <vector>

#include "acceptance/criteria.hpp"
#include "ccsgame/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return ccsgame::cli::run_cli(args, std::cout, std::cerr, acceptance::run_all);
}
