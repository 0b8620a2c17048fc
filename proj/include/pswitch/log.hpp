#pragma once

#include <atomic>
#include <cstdlib>
#include <iostream>
#include <string>
#include <string_view>

namespace pswitch {

enum class LogLevel { Quiet = 0, Warn = 1, Info = 2, Debug = 3 };

namespace detail {

inline LogLevel parse_log_level(const char* text) {
    if (text == nullptr) return LogLevel::Warn;
    const std::string_view value(text);
    if (value == "quiet" || value == "0") return LogLevel::Quiet;
    if (value == "info" || value == "2") return LogLevel::Info;
    if (value == "debug" || value == "3") return LogLevel::Debug;
    return LogLevel::Warn;
}

inline std::atomic<int>& log_level_storage() {
    static std::atomic<int> level{static_cast<int>(parse_log_level(std::getenv("PSWITCH_LOG")))};
    return level;
}

}  // namespace detail

/// Verbosity comes from PSWITCH_LOG (quiet|warn|info|debug or 0-3) unless overridden.
inline LogLevel log_level() { return static_cast<LogLevel>(detail::log_level_storage().load()); }

inline void set_log_level(LogLevel level) { detail::log_level_storage().store(static_cast<int>(level)); }

inline void log(LogLevel level, std::string_view message) {
    if (level == LogLevel::Quiet || static_cast<int>(level) > static_cast<int>(log_level())) return;
    static constexpr std::string_view names[] = {"", "warn", "info", "debug"};
    std::cerr << "pswitch " << names[static_cast<int>(level)] << ": " << message << '\n';
}

}  // namespace pswitch
