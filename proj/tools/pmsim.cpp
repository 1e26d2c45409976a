#include <iostream>
#include <string>
#include <vector>

#include "pmsim/run.hpp"

int main(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    if (args.empty()) {
        std::cerr << "usage: pmsim <command> [--config FILE] [--set key=value]..."
                  << " [--out DIR] [--seed N]\n"
                  << "commands: spectrum coeffs fixed-points basins simulate histogram"
                  << " sweep probe-scan config-template\n";
        return 2;
    }
    return pmsim::run_command(args, std::cout, std::cerr);
}
