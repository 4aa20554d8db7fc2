#include <string>
#include <vector>

#include "damro/cli.hpp"

int main(int argc, char** argv) {
  return damro::cli::run(std::vector<std::string>(argv, argv + argc));
}
