#include <iostream>

#include "kga_cli/commands.hpp"

extern char** environ;

int main(int argc, char** argv) { return kga::cli::run_cli(argc, argv, std::cout, std::cerr, environ); }
