#include <iostream>
#include <string>
#include <vector>

#include "posefuse/cli.hpp"

int main(int argc, char** argv) {
  const std::vector<std::string> args(argv, argv + argc);
  return posefuse::cli::run(args, std::cout, std::cerr);
}
