#include <iostream>
#include <string>
#include <vector>

#include "markov_auction/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return markov_auction::cli::run(args, std::cout, std::cerr);
}
