#pragma once

#include <functional>
#include <iostream>
#include <string>
#include <utility>

namespace kgalign {

enum class LogLevel { Debug, Info, Warn };

using LogSink = std::function<void(LogLevel, const std::string&)>;

namespace detail {
inline LogSink& log_sink() {
  static LogSink sink = [](LogLevel level, const std::string& msg) {
    if (level == LogLevel::Debug) return;
    std::clog << (level == LogLevel::Warn ? "[warn] " : "[info] ") << msg << '\n';
  };
  return sink;
}
}  // namespace detail

/// Replaces the process-wide log sink; returns the previous one.
inline LogSink set_log_sink(LogSink sink) {
  return std::exchange(detail::log_sink(), std::move(sink));
}

inline void log(LogLevel level, const std::string& msg) {
  if (auto& sink = detail::log_sink()) sink(level, msg);
}

inline void log_info(const std::string& msg) { log(LogLevel::Info, msg); }
inline void log_warn(const std::string& msg) { log(LogLevel::Warn, msg); }

}  // namespace kgalign
