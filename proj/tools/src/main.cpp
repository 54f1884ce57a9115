#include <iostream>

#include "dskd/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return dskd::cli::run(args, std::cout, std::cerr);
}
