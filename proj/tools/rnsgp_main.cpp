#include "rnsgp/cli.hpp"

#include <iostream>

int main(int argc, char** argv) { return rnsgp::run_cli(argc, argv, std::cout, std::cerr); }
