#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace a2gnn::cli {

enum ExitCode : int {
    ok = 0,
    usage = 1,
    config_error = 2,
    data_error = 3,
    numeric_error = 4,
    io_error = 5,
};

// Entry point shared by the executable and the tests. args excludes argv[0].
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace a2gnn::cli
