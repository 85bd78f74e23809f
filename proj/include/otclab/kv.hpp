#pragma once

#include <filesystem>
#include <fstream>
#include <map>
#include <string>

#include "otclab/errors.hpp"

namespace otclab {

// key=value text files ('#' starts a comment, blank lines ignored).
inline std::map<std::string, std::string> read_kv_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  std::map<std::string, std::string> out;
  std::string line;
  size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw DataError("malformed line " + std::to_string(line_no) + " in " +
                      path.string() + " (expected key=value)");
    }
    out[line.substr(0, eq)] = line.substr(eq + 1);
  }
  return out;
}

}  // namespace otclab
