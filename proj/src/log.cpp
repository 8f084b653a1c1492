#include "fedzge/log.hpp"

#include <atomic>
#include <iostream>
#include <mutex>

namespace fedzge {

namespace {
std::atomic<LogLevel> g_level{LogLevel::warn};
std::mutex g_mutex;
}  // namespace

void set_log_level(LogLevel level) { g_level = level; }
LogLevel log_level() { return g_level; }

void log(LogLevel level, std::string_view message) {
  if (level < g_level.load()) return;
  static constexpr const char* kNames[] = {"debug", "info", "warn", "quiet"};
  std::lock_guard lock(g_mutex);
  std::clog << "[fedzge " << kNames[static_cast<int>(level)] << "] " << message << '\n';
}

}  // namespace fedzge
