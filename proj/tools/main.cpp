#include <iostream>

#include "cli.hpp"

int main(int argc, char** argv) { return vitalid::cli::run(argc, argv, std::cout, std::cerr); }
