#include "satkit/log.hpp"

#include <cstdio>
#include <mutex>
#include <utility>

namespace satkit {

namespace {
std::mutex g_mutex;
WarnHandler g_handler;
}  // namespace

void set_warn_handler(WarnHandler handler) {
    std::lock_guard<std::mutex> lock(g_mutex);
    g_handler = std::move(handler);
}

void warn(const std::string& message) {
    WarnHandler handler;
    {
        std::lock_guard<std::mutex> lock(g_mutex);
        handler = g_handler;
    }
    if (handler) {
        handler(message);
    } else {
        std::fprintf(stderr, "[satkit] warning: %s\n", message.c_str());
    }
}

}  // namespace satkit
