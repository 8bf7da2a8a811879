#include <iostream>

#include "qrwave/cli.hpp"

int main(int argc, char** argv) { return qrwave::cli::run(argc, argv, std::cout, std::cerr); }
