#pragma once

#include <cstddef>
#include <functional>

namespace fitngp {

/// Caps the worker count used by parallel_for. 0 means automatic: the
/// FITNGP_THREADS environment variable if set, else the hardware concurrency.
void set_thread_count(unsigned n);

/// Resolved worker count, always >= 1.
unsigned thread_count();

/// Runs body(i) for i in [0, n). Indices are handed out dynamically, so
/// body must only write to per-index state.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

}  // namespace fitngp
