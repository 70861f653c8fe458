#include <string>
#include <vector>

#include "specdiff/cli.hpp"

int main(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    return specdiff::run_cli(args);
}
