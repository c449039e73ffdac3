#include <iostream>

#include "semenet/pipeline/cli.hpp"

int main(int argc, char** argv) { return semenet::run_cli(argc, argv, std::cout, std::cerr); }
