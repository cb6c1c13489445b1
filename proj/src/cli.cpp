#include "apkr/cli.hpp"

#include <cstdio>

namespace apkr {

int cli_main(const std::vector<std::string>& args) {
    (void)args;
    std::puts("placeholder");
    return 2;
}

}  // namespace apkr
