#include <iostream>
#include <string>
#include <vector>

#include "fdnn/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv, argv + argc);
  return fdnn::cli::run(args, std::cout, std::cerr);
}
