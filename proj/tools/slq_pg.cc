#include <iostream>

#include "slq/cli.h"

int main(int argc, char** argv) {
  return slq::run_cli(argc, argv, std::cout, std::cerr);
}
