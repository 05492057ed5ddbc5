#include "styleproj/cli.hpp"

#include <iostream>

int main(int argc, char** argv) { return styleproj::run_cli(argc, argv, std::cout, std::cerr); }
