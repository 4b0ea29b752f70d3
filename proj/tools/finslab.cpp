#include <iostream>

#include "finslab/cli.hpp"

int main(int argc, char** argv) { return finslab::run_cli(argc, argv, std::cout, std::cerr); }
