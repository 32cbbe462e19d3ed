#include "cmtf/cli.hpp"

#include <iostream>

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return cmtf::run_cli(args, std::cout, std::cerr);
}
