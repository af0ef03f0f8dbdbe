#include "activedpo/io.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>

#include "activedpo/errors.hpp"

namespace activedpo {

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "'");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

void write_file_atomic(const std::string& path, const std::string& contents) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write '" + tmp + "'");
    out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    if (!out) throw IoError("short write to '" + tmp + "'");
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw IoError("cannot rename '" + tmp + "' to '" + path + "': " + ec.message());
}

void append_line(const std::string& path, const std::string& line) {
  std::ofstream out(path, std::ios::app);
  if (!out) throw IoError("cannot append to '" + path + "'");
  out << line << '\n';
}

std::vector<nlohmann::json> read_jsonl(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path + "'");
  std::vector<nlohmann::json> rows;
  std::string line;
  int line_number = 0;
  while (std::getline(in, line)) {
    ++line_number;
    if (line.empty()) continue;
    try {
      rows.push_back(nlohmann::json::parse(line));
    } catch (const nlohmann::json::parse_error& e) {
      throw FormatError(path + ":" + std::to_string(line_number) + ": " + e.what());
    }
  }
  return rows;
}

void write_jsonl(const std::string& path, const std::vector<nlohmann::json>& rows) {
  std::string contents;
  for (const auto& row : rows) {
    contents += row.dump();
    contents += '\n';
  }
  write_file_atomic(path, contents);
}

}  // namespace activedpo
