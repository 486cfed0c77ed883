#pragma once

#include <cstdio>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace affect::csv {

// Splits one CSV line on ',' and trims surrounding whitespace per field.
std::vector<std::string> split_fields(std::string_view line);

// Strict double parse: the whole field must be consumed. Rejects hex-float
// prefixes sneaking past strtod only if the field is otherwise garbage;
// NaN/inf parse fine and are caught by the finiteness checks upstream.
std::optional<double> parse_double(std::string_view field);

// Strict non-negative integer parse.
std::optional<long long> parse_index(std::string_view field);

// Shortest-exact double formatting (17 significant digits round-trips IEEE
// doubles through a correctly rounded strtod).
std::string format_double(double value);

// Reads all lines of a text file, handling \r\n. Throws errc::io_error.
std::vector<std::string> read_lines(const std::string& path);

}  // namespace affect::csv
