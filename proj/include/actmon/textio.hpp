#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace actmon {

// Whitespace-separated tokens (one-or-more spaces/tabs), CR tolerated at EOL.
std::vector<std::string_view> split_fields(std::string_view line);

std::vector<std::string_view> split_on(std::string_view s, char sep);

std::string_view trim(std::string_view s);

// Shortest round-trip-exact decimal for a double ("%.17g" is stable across
// runs, which is what the byte-identical-artifacts contract needs).
std::string fmt_g17(double v);
std::string fmt_fixed(double v, int decimals);

// Strict numeric parsing; throws actmon::DataError subclasses on garbage.
double parse_double(std::string_view s, std::string_view what);
long long parse_int(std::string_view s, std::string_view what);

std::string read_file(const std::string& path);
std::vector<std::string> read_lines(const std::string& path);
void write_file(const std::string& path, std::string_view content);

}  // namespace actmon
