#include <iostream>

#include "borrow/cli/commands.hpp"

int main(int argc, char** argv) {
    return borrow::cli::run_cli(argc, argv, std::cout, std::cerr);
}
