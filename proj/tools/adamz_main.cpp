#include <vector>

#include "adamz/cli.hpp"

int main(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    return adamz::run_cli(args);
}
