#include <string>
#include <vector>

#include "found_cli.hpp"

int main(int argc, char** argv) {
  return found::cli::run(std::vector<std::string>(argv + 1, argv + argc));
}
