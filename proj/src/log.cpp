#include "rtstokes/log.hpp"

#include <atomic>
#include <cstdarg>
#include <cstdio>
#include <cstdlib>
#include <cstring>

namespace rtstokes {

namespace {

LogLevel from_env() {
  const char *v = std::getenv("RTSTOKES_LOG");
  if (!v) return LogLevel::Warn;
  if (!std::strcmp(v, "error")) return LogLevel::Error;
  if (!std::strcmp(v, "info")) return LogLevel::Info;
  if (!std::strcmp(v, "debug")) return LogLevel::Debug;
  return LogLevel::Warn;
}

std::atomic<int> &level_storage() {
  static std::atomic<int> level{static_cast<int>(from_env())};
  return level;
}

void emit(LogLevel level, const char *tag, const char *fmt, va_list ap) {
  if (static_cast<int>(level) > level_storage().load()) return;
  char buf[1024];
  std::vsnprintf(buf, sizeof buf, fmt, ap);
  std::fprintf(stderr, "[rtstokes %s] %s\n", tag, buf);
}

}  // namespace

LogLevel log_level() { return static_cast<LogLevel>(level_storage().load()); }
void set_log_level(LogLevel level) { level_storage().store(static_cast<int>(level)); }

#define RTS_LOG_FN(name, level, tag) \
  void name(const char *fmt, ...) {  \
    va_list ap;                      \
    va_start(ap, fmt);               \
    emit(level, tag, fmt, ap);       \
    va_end(ap);                      \
  }

RTS_LOG_FN(log_warn, LogLevel::Warn, "warn")
RTS_LOG_FN(log_info, LogLevel::Info, "info")
RTS_LOG_FN(log_debug, LogLevel::Debug, "debug")

#undef RTS_LOG_FN

}  // namespace rtstokes
