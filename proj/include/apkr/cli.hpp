#pragma once

#include <string>
#include <vector>

namespace apkr {

// Entry point shared by the apkr binary and the CLI tests. Returns the
// process exit code: 0 success, 1 guarantee/threshold failure, 2 usage
// error, 3 numerical error.
int cli_main(const std::vector<std::string>& args);

}  // namespace apkr
