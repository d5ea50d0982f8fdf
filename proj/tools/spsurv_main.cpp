#include <iostream>

#include "spsurv/cli.hpp"

int main(int argc, char** argv) { return spsurv::run_cli(argc, argv, std::cout, std::cerr); }
