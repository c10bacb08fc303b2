#pragma once

#include <cstdio>
#include <cstdlib>
#include <cstring>

namespace ph2::log {

enum class Level : int { error = 0, info = 1, debug = 2 };

// Log verbosity comes from the PH2_LOG environment variable
// (error|info|debug). Unset defaults to info.
inline Level level() {
    static Level lv = [] {
        const char* e = std::getenv("PH2_LOG");
        if (e == nullptr) return Level::info;
        if (std::strcmp(e, "error") == 0) return Level::error;
        if (std::strcmp(e, "debug") == 0) return Level::debug;
        return Level::info;
    }();
    return lv;
}

template <typename... Args>
void error(const char* fmt, Args... args) {
    std::fprintf(stderr, "[error] ");
    if constexpr (sizeof...(Args) == 0)
        std::fputs(fmt, stderr);
    else
        std::fprintf(stderr, fmt, args...);
    std::fprintf(stderr, "\n");
}

template <typename... Args>
void warn(const char* fmt, Args... args) {
    if (level() >= Level::info) {
        std::fprintf(stderr, "[warn] ");
        if constexpr (sizeof...(Args) == 0)
            std::fputs(fmt, stderr);
        else
            std::fprintf(stderr, fmt, args...);
        std::fprintf(stderr, "\n");
    }
}

template <typename... Args>
void info(const char* fmt, Args... args) {
    if (level() >= Level::info) {
        std::fprintf(stderr, "[info] ");
        if constexpr (sizeof...(Args) == 0)
            std::fputs(fmt, stderr);
        else
            std::fprintf(stderr, fmt, args...);
        std::fprintf(stderr, "\n");
    }
}

template <typename... Args>
void debug(const char* fmt, Args... args) {
    if (level() >= Level::debug) {
        std::fprintf(stderr, "[debug] ");
        if constexpr (sizeof...(Args) == 0)
            std::fputs(fmt, stderr);
        else
            std::fprintf(stderr, fmt, args...);
        std::fprintf(stderr, "\n");
    }
}

} // namespace ph2::log
