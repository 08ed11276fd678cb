#include "recscale/common/text.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>

namespace recscale::text {

namespace {
bool is_space(char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; }
}  // namespace

std::string_view trim(std::string_view s) {
    while (!s.empty() && is_space(s.front())) s.remove_prefix(1);
    while (!s.empty() && is_space(s.back())) s.remove_suffix(1);
    return s;
}

std::string to_lower(std::string_view s) {
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return out;
}

std::vector<std::string_view> split_lines(std::string_view s) {
    std::vector<std::string_view> lines;
    std::size_t start = 0;
    while (start <= s.size()) {
        const std::size_t end = s.find('\n', start);
        if (end == std::string_view::npos) {
            if (start < s.size()) lines.push_back(s.substr(start));
            break;
        }
        std::string_view line = s.substr(start, end - start);
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        lines.push_back(line);
        start = end + 1;
    }
    return lines;
}

bool iequals(std::string_view a, std::string_view b) {
    return a.size() == b.size() &&
           std::equal(a.begin(), a.end(), b.begin(), [](unsigned char x, unsigned char y) {
               return std::tolower(x) == std::tolower(y);
           });
}

bool contains(std::string_view haystack, std::string_view needle) {
    return haystack.find(needle) != std::string_view::npos;
}

std::size_t count_occurrences(std::string_view haystack, std::string_view needle) {
    if (needle.empty()) return 0;
    std::size_t n = 0;
    for (std::size_t pos = haystack.find(needle); pos != std::string_view::npos;
         pos = haystack.find(needle, pos + needle.size())) {
        ++n;
    }
    return n;
}

namespace {

// Length of a leading marker, or 0.
std::size_t marker_length(std::string_view s) {
    if (s.empty()) return 0;
    if (s.front() == '-' || s.front() == '*' || s.front() == '+') {
        // "**Bold**" is emphasis, not a bullet.
        if (s.size() > 1 && s[0] == '*' && s[1] == '*') return 0;
        return 1;
    }
    if (s.substr(0, 3) == "\xE2\x80\xA2") return 3;  // U+2022 bullet
    std::size_t i = 0;
    while (i < s.size() && std::isdigit(static_cast<unsigned char>(s[i]))) ++i;
    if (i > 0 && i < s.size() && (s[i] == '.' || s[i] == ')' || s[i] == ':')) return i + 1;
    if (s.front() == '[') {
        std::size_t j = 1;
        while (j < s.size() && std::isdigit(static_cast<unsigned char>(s[j]))) ++j;
        if (j > 1 && j < s.size() && s[j] == ']') return 0;  // bracketed index is content
    }
    return 0;
}

}  // namespace

bool has_list_marker(std::string_view line) { return marker_length(trim(line)) > 0; }

std::string_view strip_list_marker(std::string_view line) {
    line = trim(line);
    return trim(line.substr(marker_length(line)));
}

std::string strip_emphasis(std::string_view s) {
    std::string out;
    out.reserve(s.size());
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (s[i] == '*' || s[i] == '`') continue;
        if (s[i] == '_' && i + 1 < s.size() && s[i + 1] == '_') {
            ++i;
            continue;
        }
        out.push_back(s[i]);
    }
    return std::string(trim(out));
}

std::string fixed(double value, int decimals) {
    if (std::isnan(value)) return "nan";
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.*f", decimals, value);
    std::string out(buf);
    // Avoid "-0.0000".
    if (out.front() == '-' && out.find_first_not_of("-0.") == std::string::npos) out.erase(0, 1);
    return out;
}

}  // namespace recscale::text
