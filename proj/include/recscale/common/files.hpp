#pragma once

#include <nlohmann/json.hpp>

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace recscale {

namespace fs = std::filesystem;
using nlohmann::json;

std::string read_file(const fs::path& path);

// Writes to a sibling temp file then renames over the target.
void write_file_atomic(const fs::path& path, std::string_view content);

// Appends one line and flushes. Used for checkpoints that must survive a kill.
void append_line(const fs::path& path, std::string_view line);

struct JsonLine {
    std::size_t line_number = 0;  // 1-based
    json value;
};

struct JsonLinesResult {
    std::vector<JsonLine> records;
    std::vector<std::pair<std::size_t, std::string>> errors;  // (line, message)
};

// Parses a JSON-lines file. Blank lines are ignored; unparseable lines are
// reported in `errors` and skipped.
JsonLinesResult read_jsonl(const fs::path& path);

std::string to_jsonl(const std::vector<json>& rows);

std::string sha256_file(const fs::path& path);

}  // namespace recscale
