#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace tackscan::text {

/// Shortest decimal form that parses back to the same double.
std::string format_double(double v);
/// Fixed number of decimals, for reports.
std::string format_fixed(double v, int decimals);

/// Whole-string parse; throws ValidationError naming `what` on failure.
double parse_double(std::string_view s, std::string_view what = "number");
long long parse_int(std::string_view s, std::string_view what = "integer");

std::string_view trim(std::string_view s);
std::vector<std::string_view> split(std::string_view s, char sep);
std::vector<double> parse_double_list(std::string_view s, std::string_view what);

}  // namespace tackscan::text
