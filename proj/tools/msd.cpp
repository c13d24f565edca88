#include <iostream>

#include "msd/cli.hpp"

int main(int argc, char** argv) { return msd::run_cli(argc, argv, std::cout, std::cerr); }
