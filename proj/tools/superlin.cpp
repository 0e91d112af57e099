#include <iostream>

#include "superlin/cli.hpp"

int main(int argc, char** argv) {
  return superlin::cli::main_entry(argc, argv, std::cout, std::cerr);
}
