#include <iostream>
#include <string>
#include <vector>

#include "langdiv/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return langdiv::run_command(args, std::cout, std::cerr);
}
