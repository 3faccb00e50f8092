#include <iostream>
#include <string>
#include <vector>

#include "wq/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv, argv + argc);
  return wq::run_cli(args, std::cout, std::cerr);
}
