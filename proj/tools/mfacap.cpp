#include <iostream>

#include "mfa/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return mfa::dispatch(args, std::cout, std::cerr);
}
