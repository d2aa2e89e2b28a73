#include <iostream>

#include "protodiff/cli.hpp"

int main(int argc, char** argv) { return protodiff::run_cli(argc, argv, std::cout, std::cerr); }
