#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace recscale::text {

std::string_view trim(std::string_view s);
std::string to_lower(std::string_view s);
std::vector<std::string_view> split_lines(std::string_view s);
bool iequals(std::string_view a, std::string_view b);
bool contains(std::string_view haystack, std::string_view needle);
std::size_t count_occurrences(std::string_view haystack, std::string_view needle);

// Drops a leading list marker: "1.", "2)", "-", "*", "•" and surrounding
// markdown emphasis ("**Name**").
std::string_view strip_list_marker(std::string_view line);
bool has_list_marker(std::string_view line);
std::string strip_emphasis(std::string_view s);

// Fixed-point decimal rendering, used wherever output bytes must be stable.
std::string fixed(double value, int decimals);

}  // namespace recscale::text
