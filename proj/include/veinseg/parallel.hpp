#pragma once

#include <cstddef>
#include <functional>

namespace veinseg {

// Worker cap from VEINSEG_THREADS; 1 when unset or invalid.
std::size_t thread_count();

// Overrides the environment for the current process (0 restores it).
void set_thread_count(std::size_t n);

// Runs body(k) for k in [0, n). Iterations must write disjoint outputs;
// callers reduce per-iteration partials in index order so results do not
// depend on the worker count.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

}  // namespace veinseg
