#pragma once

#include <cstddef>
#include <functional>

namespace fpps {

/// Worker count used when a caller passes threads = 0. Starts at 1; the CLI
/// sets it from --threads.
int default_threads();
void set_default_threads(int threads);

/// Runs body(i) for i in [0, count) on up to `threads` workers. Work items are
/// handed out dynamically, so results must be written to slot i and never
/// depend on which worker ran them. The first exception thrown by any item is
/// rethrown after all workers stop.
void parallel_for(std::size_t count, const std::function<void(std::size_t)>& body,
                  int threads = 0);

}  // namespace fpps
