#pragma once

#include <cstddef>
#include <functional>
#include <vector>

namespace kns {

/// Runs body(i) for i in [0, count) on a pool of worker threads. Results
/// must be written by index; callers reduce afterwards in index order so the
/// outcome does not depend on scheduling. threads = 0 uses the hardware
/// concurrency. The first exception thrown by a body is rethrown.
void parallel_for(std::size_t count, const std::function<void(std::size_t)>& body, unsigned threads = 0);

template <typename T, typename F>
std::vector<T> parallel_map(std::size_t count, F&& fn, unsigned threads = 0) {
  std::vector<T> out(count);
  parallel_for(count, [&](std::size_t i) { out[i] = fn(i); }, threads);
  return out;
}

}  // namespace kns
