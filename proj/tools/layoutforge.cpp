#include <iostream>

#include "layoutforge/cli.hpp"

int main(int argc, char** argv) { return layoutforge::run_cli(argc, argv, std::cout, std::cerr); }
