#include <string>
#include <vector>

#include "simt/harness/cli.hpp"

int main(int argc, char **argv) {
    return simt::harness::cli_main(std::vector<std::string>(argv, argv + argc));
}
