#pragma once

#include <string>
#include <vector>

namespace robroute::csv {

/// Shortest round-trip decimal form (via std::to_chars); keeps CSV output
/// byte-stable across runs.
std::string format_double(double x);

std::vector<std::string> split_line(const std::string& line);

/// Whole-file reader; skips blank lines. Throws Error(IoError/ParseError).
std::vector<std::vector<std::string>> read_file(const std::string& path);

double parse_double(const std::string& field, const std::string& context);
long parse_long(const std::string& field, const std::string& context);

std::string join(const std::vector<std::string>& fields);

} // namespace robroute::csv
