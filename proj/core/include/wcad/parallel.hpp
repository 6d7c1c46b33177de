#pragma once

#include <cstddef>
#include <functional>

namespace wcad {

// Deterministic data parallelism: work is split into disjoint index ranges,
// each range is processed with its internal loop order unchanged, so results
// do not depend on the number of worker threads. Reductions must never be
// split across ranges.
void parallel_for(size_t n, const std::function<void(size_t begin, size_t end)>& body);

// Pool size control (default: min(hardware_concurrency, 8), overridable via
// the WCAD_THREADS environment variable).
void set_num_threads(int n);
int num_threads();

}  // namespace wcad
