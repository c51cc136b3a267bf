#include "wassbound/common.hpp"

#include <cstdlib>

namespace wassbound {

std::size_t default_workers() {
  if (const char* env = std::getenv("WB_WORKERS")) {
    char* end = nullptr;
    const long value = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && value > 0) return static_cast<std::size_t>(value);
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : hw;
}

}  // namespace wassbound
