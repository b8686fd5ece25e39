#include <iostream>
#include <string>
#include <vector>

#include "famectl/app.hpp"

int main(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    return famectl::run(args, std::cout, std::cerr);
}
