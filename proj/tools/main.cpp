#include <iostream>

#include "synesthesia/cli.hpp"

int main(int argc, char** argv) { return synesthesia::run_cli(argc, argv, std::cout, std::cerr); }
