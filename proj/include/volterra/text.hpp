#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace volterra {

/// Shortest decimal text that parses back to exactly the same double.
std::string format_double(double x);

/// Locale-independent strict parse; throws ConfigError on trailing junk.
double parse_double(std::string_view text);
unsigned long long parse_u64(std::string_view text);
long long parse_i64(std::string_view text);

std::string format_list(const std::vector<double>& values);
std::vector<double> parse_list(std::string_view text);

std::string_view trim(std::string_view text);

}  // namespace volterra
