#pragma once

#include <string>
#include <string_view>

namespace xmm {

// Shortest decimal text that parses back to the identical double.
std::string format_double(double v);

// Strict parse of a full token; returns false on any trailing garbage.
bool parse_double(std::string_view token, double& out);
bool parse_int(std::string_view token, long long& out);

}  // namespace xmm
