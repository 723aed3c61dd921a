#include "qenc/cli.hpp"

int main(int argc, char** argv) {
  return qenc::cli_main(std::vector<std::string>(argv + 1, argv + argc));
}
