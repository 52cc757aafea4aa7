#pragma once

namespace rtstokes {

enum class LogLevel { Error = 0, Warn = 1, Info = 2, Debug = 3 };

/// Threshold read once from RTSTOKES_LOG (error, warn, info, debug);
/// warn when unset. Messages go to stderr.
LogLevel log_level();
void set_log_level(LogLevel level);

void log_warn(const char *fmt, ...) __attribute__((format(printf, 1, 2)));
void log_info(const char *fmt, ...) __attribute__((format(printf, 1, 2)));
void log_debug(const char *fmt, ...) __attribute__((format(printf, 1, 2)));

}  // namespace rtstokes
