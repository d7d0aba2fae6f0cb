#include <iostream>

#include "rpsopt/commands.hpp"

int main(int argc, char** argv) { return rpsopt::run_cli(argc, argv, std::cout, std::cerr); }
