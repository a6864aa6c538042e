#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace kseg::cli {

/// Exit codes: 0 success, 1 runtime failure, 2 usage or validation error.
/// Errors are reported on `err` as one JSON object {"error": {...}}.
int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);
int dispatch(int argc, char** argv);

}  // namespace kseg::cli
