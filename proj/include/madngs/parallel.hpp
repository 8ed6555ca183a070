#pragma once

#include <cstddef>
#include <functional>

namespace madngs {

/// Caps the number of worker threads used by parallel_for (the CLI --jobs flag). Minimum 1.
void set_max_workers(std::size_t n);
std::size_t max_workers();

/// Runs body(i) for i in [0, n), split into contiguous chunks over at most max_workers() threads.
/// Bodies must write only to slot i of their outputs; callers reduce in index order afterwards.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

}  // namespace madngs
