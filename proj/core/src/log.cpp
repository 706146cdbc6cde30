#include "ctirag/log.hpp"

#include <cstdio>
#include <mutex>

namespace ctirag {

namespace {

std::mutex g_mutex;
LogLevel g_level = LogLevel::warn;
LogSink g_sink;

const char* level_name(LogLevel level) {
    switch (level) {
    case LogLevel::debug: return "debug";
    case LogLevel::info: return "info";
    case LogLevel::warn: return "warn";
    case LogLevel::error: return "error";
    }
    return "?";
}

} // namespace

void set_log_sink(LogSink sink) {
    std::lock_guard lock(g_mutex);
    g_sink = std::move(sink);
}

void set_log_level(LogLevel level) {
    std::lock_guard lock(g_mutex);
    g_level = level;
}

void log(LogLevel level, const std::string& message) {
    std::lock_guard lock(g_mutex);
    if (level < g_level) return;
    if (g_sink) {
        g_sink(level, message);
        return;
    }
    std::fprintf(stderr, "[ctirag %s] %s\n", level_name(level), message.c_str());
}

} // namespace ctirag
