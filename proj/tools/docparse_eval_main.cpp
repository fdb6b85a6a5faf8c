#include <iostream>

#include "docparse_eval/cli.hpp"

int main(int argc, char** argv) { return docparse_eval::run_cli(argc, argv, std::cout, std::cerr); }
