#include "rdflex/log.hpp"

#include <atomic>
#include <iostream>
#include <mutex>

namespace rdflex {

namespace {
std::atomic<bool> g_enabled{true};
std::mutex g_mutex;
}  // namespace

void warn(std::string_view module, std::string_view msg) {
    if (!g_enabled.load(std::memory_order_relaxed)) return;
    std::lock_guard lock(g_mutex);
    std::cerr << "warning: [" << module << "] " << msg << '\n';
}

void set_warnings_enabled(bool on) { g_enabled.store(on); }

bool warnings_enabled() { return g_enabled.load(); }

}  // namespace rdflex
