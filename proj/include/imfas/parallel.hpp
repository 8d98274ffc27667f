#pragma once

#include <cstddef>
#include <functional>

namespace imfas {

// Worker cap: IMFAS_THREADS when set (>= 1), otherwise the hardware thread
// count.
int max_threads();

// Runs fn(0..n-1) on up to max_threads() workers. Work items must write only
// to their own slots; the first exception thrown by any item is rethrown.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

}  // namespace imfas
