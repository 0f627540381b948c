#include <iostream>
#include <string>
#include <vector>

#include "coins/cli.hpp"

int main(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    return coins::cli::run(std::move(args), std::cin, std::cout, std::cerr);
}
