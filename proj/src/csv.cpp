#include "robroute/csv.hpp"

#include <charconv>
#include <fstream>

#include "robroute/errors.hpp"

namespace robroute::csv {

std::string format_double(double x) {
    char buf[40];
    const auto res = std::to_chars(buf, buf + sizeof(buf), x);
    return std::string(buf, res.ptr);
}

std::vector<std::string> split_line(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : line) {
        if (c == ',') {
            out.push_back(cur);
            cur.clear();
        } else if (c != '\r') {
            cur.push_back(c);
        }
    }
    out.push_back(cur);
    return out;
}

std::vector<std::vector<std::string>> read_file(const std::string& path) {
    std::ifstream in(path);
    require(in.good(), ErrorCode::IoError, "cannot open " + path);
    std::vector<std::vector<std::string>> rows;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty() || line == "\r") continue;
        rows.push_back(split_line(line));
    }
    return rows;
}

double parse_double(const std::string& field, const std::string& context) {
    double value = 0.0;
    const char* first = field.data();
    const char* last = field.data() + field.size();
    while (first != last && *first == ' ') ++first;
    const auto res = std::from_chars(first, last, value);
    require(res.ec == std::errc() && res.ptr == last, ErrorCode::ParseError,
            "bad number '" + field + "' in " + context);
    return value;
}

long parse_long(const std::string& field, const std::string& context) {
    long value = 0;
    const char* first = field.data();
    const char* last = field.data() + field.size();
    while (first != last && *first == ' ') ++first;
    const auto res = std::from_chars(first, last, value);
    require(res.ec == std::errc() && res.ptr == last, ErrorCode::ParseError,
            "bad integer '" + field + "' in " + context);
    return value;
}

std::string join(const std::vector<std::string>& fields) {
    std::string out;
    for (std::size_t i = 0; i < fields.size(); ++i) {
        if (i) out.push_back(',');
        out += fields[i];
    }
    return out;
}

} // namespace robroute::csv
