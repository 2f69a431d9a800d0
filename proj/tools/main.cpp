#include <iostream>

#include "polimp/cli.hpp"

int main(int argc, char** argv) {
  return polimp::cli::run(argc, argv, std::cout, std::cerr);
}
