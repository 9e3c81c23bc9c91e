#include <vector>

#include "pclbench/cli.hpp"

int main(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    return pclbench::cli::main_entry(args);
}
