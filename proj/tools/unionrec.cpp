#include <iostream>

#include "unionrec/cli.hpp"

int main(int argc, char** argv) {
  return unionrec::cli::run_cli({argv + 1, argv + argc}, std::cout, std::cerr);
}
