#pragma once

#include <string>
#include <vector>

namespace chardemand::cli {

/// Exit codes: 0 success, 1 verification failure, 2 input or usage error,
/// 3 error raised by a library module.
int run(int argc, const char* const* argv);
int run(const std::vector<std::string>& args);  // args exclude the program name

/// Thread count from CHARDEMAND_THREADS, or 1.
unsigned default_threads();

}  // namespace chardemand::cli
