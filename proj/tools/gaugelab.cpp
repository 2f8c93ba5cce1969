#include <iostream>

#include "gaugelab/cli.hpp"

int main(int argc, char** argv) { return gaugelab::cli::main(argc, argv, std::cout, std::cerr); }
