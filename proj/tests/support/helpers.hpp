#pragma once

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>

#include "rll/error.hpp"

namespace test_helpers {

inline std::string tmp_path(const std::string& name) {
  return (std::filesystem::temp_directory_path() / name).string();
}

inline void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out << content;
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Message of the rll::Error thrown by fn, or "" if nothing was thrown.
inline std::string error_message(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const rll::Error& e) {
    return e.what();
  }
  return "";
}

inline bool throws_with(const std::function<void()>& fn, const std::string& needle) {
  return error_message(fn).find(needle) != std::string::npos;
}

}  // namespace test_helpers
