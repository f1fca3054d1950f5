#include <iostream>

#include "knnrate/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return knnrate::run_cli(args, std::cout, std::cerr);
}
