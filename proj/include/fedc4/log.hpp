#pragma once

#include <string>

namespace fedc4 {

// Log level comes from the FEDC4_LOG env var: error (default), info, debug.
enum class LogLevel { error = 0, info = 1, debug = 2 };

LogLevel log_level();
void log_error(const std::string& msg);
void log_info(const std::string& msg);
void log_debug(const std::string& msg);

}  // namespace fedc4
