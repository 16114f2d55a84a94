#include <iostream>

#include "uqstream/cli.hpp"

int main(int argc, char** argv) { return uqstream::run_cli(argc, argv, std::cout, std::cerr); }
