#include <iostream>

#include "veinseg/cli.hpp"

int main(int argc, char** argv) { return veinseg::cli_main(argc, argv, std::cout, std::cerr); }
