#include "warpfake/parallel.hpp"

#include <cstdlib>
#include <string>

namespace warpfake {

int default_worker_count() {
  if (const char* env = std::getenv("WARPFAKE_WORKERS"); env != nullptr && *env != '\0') {
    try {
      const int n = std::stoi(env);
      if (n >= 1) return n;
    } catch (const std::exception&) {
    }
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
}

}  // namespace warpfake
