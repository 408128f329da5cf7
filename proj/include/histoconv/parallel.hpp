#pragma once

#include <algorithm>
#include <cstdlib>
#include <thread>

namespace histoconv {

// Worker cap for OpenMP loops: HISTOCONV_THREADS, default logical CPU count.
// All parallel loops write disjoint outputs with per-element accumulation, so
// results do not depend on the thread count.
inline int worker_count() {
  static const int n = [] {
    if (const char* env = std::getenv("HISTOCONV_THREADS")) {
      char* end = nullptr;
      const long v = std::strtol(env, &end, 10);
      if (end != env && v >= 1) return static_cast<int>(std::min(v, 256L));
    }
    const unsigned hw = std::thread::hardware_concurrency();
    return hw ? static_cast<int>(hw) : 1;
  }();
  return n;
}

}  // namespace histoconv
