#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace structmap::cli {

/// Entry point of the `structmap` tool. Returns the process exit code: 0 iff
/// every requested artifact was written.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace structmap::cli
