#include <iostream>

#include "mamr/cli.hpp"

int main(int argc, char** argv) { return mamr::run_cli(argc, argv, std::cout, std::cerr); }
