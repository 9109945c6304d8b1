#pragma once

#include <sstream>
#include <string>

namespace bevforge {

enum class LogLevel { Error = 0, Warn = 1, Info = 2, Debug = 3 };

// Threshold comes from the BEVFORGE_LOG environment variable (error|warn|info|debug),
// read once on first use; unset or unrecognized values mean warn.
LogLevel log_threshold();

bool log_enabled(LogLevel level);

// Writes "[level] message\n" to stderr when the level passes the threshold.
void log_message(LogLevel level, const std::string& message);

namespace detail {
inline void log_stream_append(std::ostringstream&) {}

template <typename T, typename... Rest>
void log_stream_append(std::ostringstream& out, const T& value, const Rest&... rest) {
  out << value;
  log_stream_append(out, rest...);
}
}  // namespace detail

// log(LogLevel::Info, "lifted ", n, " points") -- arguments are streamed only
// when the level is enabled.
template <typename... Args>
void log(LogLevel level, const Args&... args) {
  if (!log_enabled(level)) return;
  std::ostringstream out;
  detail::log_stream_append(out, args...);
  log_message(level, out.str());
}

}  // namespace bevforge
