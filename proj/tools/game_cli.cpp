#include <iostream>

#include "game/cli.hpp"

int main(int argc, char** argv) { return game::cli::run(argc, argv, std::cout, std::cerr); }
