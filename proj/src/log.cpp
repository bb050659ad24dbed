#include "fedc4/log.hpp"

#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <mutex>

namespace fedc4 {

LogLevel log_level() {
  static const LogLevel level = [] {
    const char* env = std::getenv("FEDC4_LOG");
    if (!env) return LogLevel::error;
    if (std::strcmp(env, "debug") == 0) return LogLevel::debug;
    if (std::strcmp(env, "info") == 0) return LogLevel::info;
    return LogLevel::error;
  }();
  return level;
}

namespace {
std::mutex log_mutex;
void emit(const char* tag, const std::string& msg) {
  std::lock_guard<std::mutex> lock(log_mutex);
  std::fprintf(stderr, "[%s] %s\n", tag, msg.c_str());
}
}  // namespace

void log_error(const std::string& msg) { emit("error", msg); }

void log_info(const std::string& msg) {
  if (log_level() >= LogLevel::info) emit("info", msg);
}

void log_debug(const std::string& msg) {
  if (log_level() >= LogLevel::debug) emit("debug", msg);
}

}  // namespace fedc4
