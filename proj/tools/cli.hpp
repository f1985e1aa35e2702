#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace pmd::cli {

/// Runs one pmdepth invocation. `args` excludes the program name.
/// Returns 0 on success, 2 on a usage error and 1 on a runtime error.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace pmd::cli
