#pragma once

#include <string>
#include <vector>

namespace phigeo {

/// Shortest representation that round-trips the double exactly.
std::string format_double(double x);

/// Fixed 17-significant-digit form (profile caches).
std::string format_double_17(double x);

std::string join_csv(const std::vector<std::string>& cells);

void write_text_file(const std::string& path, const std::string& content);
std::string read_text_file(const std::string& path);

}  // namespace phigeo
