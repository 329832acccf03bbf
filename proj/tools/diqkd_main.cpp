#include <iostream>

#include "diqkd/cli.hpp"

int main(int argc, char** argv) { return diqkd::cli::main_entry(argc, argv, std::cout, std::cerr); }
