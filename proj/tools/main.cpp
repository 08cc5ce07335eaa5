#include <iostream>

#include "spectralab/cli.hpp"

int main(int argc, char** argv) { return spectralab::run_cli(argc, argv, std::cout, std::cerr); }
