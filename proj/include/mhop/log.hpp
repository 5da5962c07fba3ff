// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <functional>
#include <iostream>
#include <mutex>
#include <string>
#include <string_view>

namespace mhop::log {

enum class Level { debug, info, warning, error };

using Sink = std::function<void(Level, std::string_view)>;

namespace detail {

inline std::mutex& sink_mutex() {
  static std::mutex m;
  return m;
}

inline Level& threshold() {
  static Level level = Level::warning;
  return level;
}

inline Sink& sink() {
  static Sink s = [](Level level, std::string_view msg) {
    static constexpr std::string_view names[] = {"debug", "info", "warning", "error"};
    std::clog << "[" << names[static_cast<int>(level)] << "] " << msg << '\n';
  };
  return s;
}

}  // namespace detail

inline void set_level(Level level) {
  std::lock_guard lock(detail::sink_mutex());
  detail::threshold() = level;
}

/// Replaces the sink; returns the previous one so callers (tests) can restore it.
inline Sink set_sink(Sink sink) {
  std::lock_guard lock(detail::sink_mutex());
  auto previous = std::move(detail::sink());
  detail::sink() = std::move(sink);
  return previous;
}

inline void write(Level level, std::string_view msg) {
  std::lock_guard lock(detail::sink_mutex());
  if (level < detail::threshold()) return;
  if (detail::sink()) detail::sink()(level, msg);
}

inline void debug(std::string_view msg) { write(Level::debug, msg); }
inline void info(std::string_view msg) { write(Level::info, msg); }
inline void warning(std::string_view msg) { write(Level::warning, msg); }
inline void error(std::string_view msg) { write(Level::error, msg); }

}  // namespace mhop::log
