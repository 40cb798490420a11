#include <iostream>

#include "ersd_cli/app.hpp"

int main(int argc, char** argv) { return ersd::cli::run(argc, argv, std::cout, std::cerr); }
