#pragma once

#include <cstdlib>
#include <iostream>
#include <string>
#include <string_view>

namespace memsim {

enum class LogLevel { kError = 0, kWarn = 1, kInfo = 2, kDebug = 3 };

// Verbosity from MEMSIM_LOG (error, warn, info, debug); warn by default.
inline LogLevel log_level() {
  static const LogLevel level = [] {
    const char* env = std::getenv("MEMSIM_LOG");
    const std::string_view v = env ? env : "";
    if (v == "error") return LogLevel::kError;
    if (v == "info") return LogLevel::kInfo;
    if (v == "debug") return LogLevel::kDebug;
    return LogLevel::kWarn;
  }();
  return level;
}

inline void log(LogLevel level, std::string_view message) {
  static constexpr const char* kNames[] = {"error", "warn", "info", "debug"};
  if (level > log_level()) return;
  std::cerr << "memsim[" << kNames[static_cast<int>(level)] << "] " << message << '\n';
}

}  // namespace memsim
