#include <iostream>
#include <string>
#include <vector>

#include "cgn/cli.hpp"

int main(int argc, char** argv) {
  return cgn::cli::run(std::vector<std::string>(argv, argv + argc), std::cout, std::cerr);
}
