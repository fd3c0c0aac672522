#include <iostream>

#include "bayeswin/cli.hpp"

int main(int argc, char** argv) {
    return bayeswin::cli::run(argc, argv, std::cout, std::cerr);
}
