#include <iostream>
#include <string>
#include <vector>

#include "choir/cli/app.hpp"

int main(int argc, char** argv) {
  return choir::cli::run(std::vector<std::string>(argv + 1, argv + argc), std::cout, std::cerr);
}
