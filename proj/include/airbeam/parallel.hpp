#pragma once

#include <cstddef>
#include <functional>

namespace airbeam {

/// 0 maps to std::thread::hardware_concurrency() (at least 1).
unsigned resolve_threads(unsigned requested) noexcept;

/// Runs body(begin, end) over disjoint chunks covering [0, count). Chunks are
/// handed out dynamically; the first exception thrown by any worker is rethrown.
void parallel_for(std::size_t count, unsigned threads, std::size_t chunk,
                  const std::function<void(std::size_t, std::size_t)>& body);

}  // namespace airbeam
