#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace activedpo::cli {

// Runs the command line tool with `args` (args[0] is the program name).
// Results go to `out`; failures are reported on `err` as one JSON object
// {"error": {"kind", "message"}} and a nonzero return value.
int main(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

// "1-10", "3,5,8" or a mix such as "1-3,7".
std::vector<std::uint64_t> parse_seed_list(const std::string& text);

}  // namespace activedpo::cli
