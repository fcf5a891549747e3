#include <iostream>

#include "popdyn/cli.hpp"

int main(int argc, char** argv) { return popdyn::cli::run(argc, argv, std::cout, std::cerr); }
