#include <iostream>

#include "refine/cli.hpp"

int main(int argc, char** argv) { return refine::cli::run(argc, argv, std::cout, std::cerr); }
