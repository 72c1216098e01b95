#include <iostream>

#include "tracecot/cli/cli.hpp"

int main(int argc, char** argv) { return tracecot::cli::run_command(argc, argv, std::cout, std::cerr); }
