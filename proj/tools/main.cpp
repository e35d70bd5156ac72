#include <iostream>

#include "fsmre/cli.hpp"

int main(int argc, char** argv) { return fsmre::run_cli(argc, argv, std::cout, std::cerr); }
