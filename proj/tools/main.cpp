#include <iostream>
#include <string>
#include <vector>

#include "attitude/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv, argv + argc);
  return attitude::cli::run(args, std::cout, std::cerr);
}
