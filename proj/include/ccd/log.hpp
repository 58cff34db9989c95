#pragma once

#include <functional>
#include <iostream>
#include <mutex>
#include <string>
#include <utility>

namespace ccd {

using LogSink = std::function<void(const std::string&)>;

namespace detail {

struct LogState {
  std::mutex mutex;
  LogSink sink = [](const std::string& msg) { std::cerr << msg << '\n'; };
};

inline LogState& log_state() {
  static LogState state;
  return state;
}

}  // namespace detail

// Replaces the warning sink and returns the previous one. Passing an empty
// function silences warnings.
inline LogSink set_log_sink(LogSink sink) {
  auto& state = detail::log_state();
  std::lock_guard lock(state.mutex);
  std::swap(state.sink, sink);
  return sink;
}

inline void log_warning(const std::string& msg) {
  auto& state = detail::log_state();
  std::lock_guard lock(state.mutex);
  if (state.sink) state.sink("warning: " + msg);
}

inline void log_info(const std::string& msg) {
  auto& state = detail::log_state();
  std::lock_guard lock(state.mutex);
  if (state.sink) state.sink(msg);
}

// Restores the previous sink on scope exit.
class ScopedLogSink {
 public:
  explicit ScopedLogSink(LogSink sink) : previous_(set_log_sink(std::move(sink))) {}
  ~ScopedLogSink() { set_log_sink(std::move(previous_)); }
  ScopedLogSink(const ScopedLogSink&) = delete;
  ScopedLogSink& operator=(const ScopedLogSink&) = delete;

 private:
  LogSink previous_;
};

}  // namespace ccd
