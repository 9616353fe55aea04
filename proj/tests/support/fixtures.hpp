#pragma once

#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>

namespace dashgen::test {

inline std::filesystem::path fixture_path(const std::string& name) {
  return std::filesystem::path(DASHGEN_FIXTURE_DIR) / name;
}

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline std::string read_fixture(const std::string& name) { return read_file(fixture_path(name)); }

inline void write_file(const std::filesystem::path& path, const std::string& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out << bytes;
}

/// Golden files are regenerated only when DASHGEN_UPDATE_GOLDEN is set.
inline bool update_golden() { return std::getenv("DASHGEN_UPDATE_GOLDEN") != nullptr; }

}  // namespace dashgen::test
