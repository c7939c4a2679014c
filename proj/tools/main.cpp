#include <iostream>

#include "synco/cli.hpp"

int main(int argc, char** argv) { return synco::run_cli(argc, argv, std::cout, std::cerr); }
