#include <iostream>

#include "propspan/cli/app.hpp"

int main(int argc, char** argv) {
  return propspan::cli::run(std::vector<std::string>(argv + 1, argv + argc), std::cout, std::cerr);
}
