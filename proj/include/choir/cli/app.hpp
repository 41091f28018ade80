#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace choir::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitData = 2;
inline constexpr int kExitNumeric = 3;

// Runs one `choir` invocation. `args` excludes the program name. Errors are
// reported on `err` and mapped onto the exit codes above.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

// Parses "3,5,8-11" into sorted unique indices. Throws UsageError.
std::vector<std::size_t> parse_index_list(const std::string& text);

// Shortest decimal text that reads back to the same double.
std::string format_number(double value);

}  // namespace choir::cli
