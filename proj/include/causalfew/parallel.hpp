#pragma once

#include <algorithm>
#include <cstdint>
#include <functional>
#include <thread>
#include <vector>

namespace causalfew {

// Process-wide worker budget. 0 = auto (hardware), 1 = serial.
void set_num_threads(int n);
int num_threads();

// Runs fn(i) for i in [begin, end). Work is split into contiguous chunks,
// one per worker, so writes to disjoint index ranges never race.
// Nested calls run serially on the calling thread.
void parallel_for(std::int64_t begin, std::int64_t end,
                  const std::function<void(std::int64_t)>& fn);

}  // namespace causalfew
