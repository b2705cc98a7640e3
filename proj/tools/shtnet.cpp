#include <iostream>
#include <string>
#include <vector>

#include "shtnet/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv, argv + argc);
  return shtnet::cli::run(args, std::cout, std::cerr);
}
