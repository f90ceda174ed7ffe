#include "fovnoise/cli.hpp"

#include <iostream>

int main(int argc, char** argv) { return fovnoise::cli::run(argc, argv, std::cout, std::cerr); }
