// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdio>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>

#include "arcall/arcall.h"

namespace tools {

struct FreeDeleter {
  void operator()(void* p) const { arcall_free(p); }
};

inline std::string take(char* s) {
  std::unique_ptr<char, FreeDeleter> owned(s);
  return owned ? std::string(owned.get()) : std::string();
}

inline int report(arcall_status status, const char* what) {
  std::cerr << what << ": " << arcall_status_string(status);
  if (*arcall_last_error()) std::cerr << ": " << arcall_last_error();
  std::cerr << '\n';
  return status == ARCALL_E_INVALID_ARGUMENT ? 2 : 1;
}

inline std::optional<std::string> slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return std::nullopt;
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline bool spit(const std::string& path, const std::string& data) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out << data;
  return static_cast<bool>(out);
}

}  // namespace tools
