#include <iostream>

#include "smartboost/cli.hpp"

int main(int argc, char** argv) { return smartboost::cli::run(argc, argv, std::cout, std::cerr); }
