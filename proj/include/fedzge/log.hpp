#pragma once

#include <string_view>

namespace fedzge {

enum class LogLevel { debug = 0, info = 1, warn = 2, quiet = 3 };

void set_log_level(LogLevel level);
LogLevel log_level();

/// Thread-safe line logger on stderr.
void log(LogLevel level, std::string_view message);

}  // namespace fedzge
