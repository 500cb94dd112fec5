#include <iostream>
#include <string>
#include <vector>

#include "textalpha/pipeline.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv, argv + argc);
  return textalpha::run_cli(args, std::cout, std::cerr);
}
