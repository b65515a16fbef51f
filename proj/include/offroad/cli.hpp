#pragma once

#include <iostream>
#include <string>
#include <vector>

namespace offroad::cli {

/// Exit codes: 0 success, 1 processing error, 2 usage error, 3 i/o error.
int run_command(const std::vector<std::string>& args, std::ostream& out = std::cout, std::ostream& err = std::cerr);

}  // namespace offroad::cli
