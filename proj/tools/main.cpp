#include <iostream>

#include "sggan/cli/app.hpp"

int main(int argc, char** argv) { return sggan::run_cli(argc, argv, std::cout, std::cerr); }
