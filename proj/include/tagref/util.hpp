#pragma once

#include <functional>
#include <string>

namespace tagref {

inline constexpr const char* kVersion = "0.1.0";

// Runs fn(i) for i in [0, n). With threads <= 1 the loop is serial; otherwise
// the range is split into contiguous chunks, one per thread. Callers must
// write only to disjoint slots so the result is independent of thread count.
void parallel_for(int n, int threads, const std::function<void(int)>& fn);

// Shortest decimal that round-trips the double exactly.
std::string fmt_double(double x);

}  // namespace tagref
