#pragma once

#include <atomic>
#include <iostream>
#include <mutex>
#include <string_view>

namespace mamr::log {

enum class Level { debug = 0, info = 1, warn = 2, error = 3, off = 4 };

inline std::atomic<Level>& threshold() {
    static std::atomic<Level> level{Level::info};
    return level;
}

inline void set_level(Level level) { threshold().store(level); }

inline void write(Level level, std::string_view tag, std::string_view message) {
    if (level < threshold().load()) return;
    static std::mutex mutex;
    std::lock_guard lock(mutex);
    std::cerr << '[' << tag << "] " << message << '\n';
}

inline void info(std::string_view message) { write(Level::info, "info", message); }
inline void warn(std::string_view message) { write(Level::warn, "warn", message); }
inline void error(std::string_view message) { write(Level::error, "error", message); }

}  // namespace mamr::log
