#include <iostream>

#include "faceq/cli.hpp"

int main(int argc, char** argv) { return faceq::cli::run_cli(argc, argv, std::cout, std::cerr); }
