#include <iostream>

#include "lbcp/cli.hpp"

int main(int argc, char** argv) { return lbcp::run_cli(argc, argv, std::cout, std::cerr); }
