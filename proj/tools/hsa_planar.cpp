#include <iostream>

#include "hsa/cli/app.hpp"

int main(int argc, char** argv) { return hsa::cli::run_app(argc, argv, std::cout, std::cerr); }
