#pragma once

#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace activedpo {

std::string read_file(const std::string& path);

// Writes to a temporary sibling and renames it into place.
void write_file_atomic(const std::string& path, const std::string& contents);

void append_line(const std::string& path, const std::string& line);

// Line-delimited JSON.
std::vector<nlohmann::json> read_jsonl(const std::string& path);
void write_jsonl(const std::string& path, const std::vector<nlohmann::json>& rows);

}  // namespace activedpo
