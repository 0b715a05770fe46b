#include "slp/log.hpp"

#include <iostream>
#include <mutex>

namespace slp {

namespace {
std::ostream* g_stream = &std::cerr;
std::mutex g_mutex;
}  // namespace

void set_warning_stream(std::ostream* os) {
  std::lock_guard lock(g_mutex);
  g_stream = os;
}

void warn(std::string_view message) {
  std::lock_guard lock(g_mutex);
  if (g_stream) *g_stream << "warning: " << message << '\n';
}

}  // namespace slp
