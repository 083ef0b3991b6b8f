#include <iostream>

#include "pass/cli.hpp"

int main(int argc, char** argv) { return pass::cli::dispatch(argc, argv, std::cout, std::cerr); }
