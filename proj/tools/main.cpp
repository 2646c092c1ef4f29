#include <iostream>
#include <string>
#include <vector>

#include "gibbsvb/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return gibbsvb::cli::run(args, std::cout, std::cerr);
}
