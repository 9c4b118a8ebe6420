#include <iostream>

#include "neurint/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return neurint::run_cli(args, std::cout, std::cerr);
}
