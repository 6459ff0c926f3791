#pragma once

#include <string>
#include <vector>

namespace beammap::util {

// Shortest decimal form that round-trips to the same double.
std::string fmt_double(double v);
// Strict parse of a full token; throws std::runtime_error on trailing junk.
double parse_double(const std::string& s);

std::vector<std::string> split(const std::string& line, char sep);

void write_text_file(const std::string& path, const std::string& content);
std::string read_text_file(const std::string& path);  // throws if missing

}  // namespace beammap::util
