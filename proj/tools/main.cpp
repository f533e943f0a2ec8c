#include <iostream>
#include <string>
#include <vector>

#include "beta3irt/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return beta3irt::run_cli(args, std::cout, std::cerr);
}
