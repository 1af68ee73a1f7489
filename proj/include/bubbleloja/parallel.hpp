#ifndef BUBBLELOJA_PARALLEL_HPP
#define BUBBLELOJA_PARALLEL_HPP

#include <cstddef>
#include <functional>

namespace bubbleloja {

// Worker cap: BUBBLELOJA_THREADS env var, 0 or unset = hardware concurrency.
int max_threads();

// Runs fn(begin, end) over disjoint chunks of [0, n). Falls back to a single
// inline call when n is small or only one worker is available.
void parallel_for(std::size_t n, const std::function<void(std::size_t, std::size_t)>& fn);

}  // namespace bubbleloja

#endif
