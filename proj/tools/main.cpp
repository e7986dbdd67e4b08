#include <iostream>

#include "slmg/cli.hpp"

int main(int argc, char** argv) { return slmg::run_cli(argc, argv, std::cout, std::cerr); }
