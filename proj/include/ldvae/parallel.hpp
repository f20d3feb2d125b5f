#pragma once

#include <cstddef>
#include <functional>

namespace ldvae {

/// Thread cap from LDVAE_THREADS (default 1, invalid values fall back to 1).
std::size_t thread_budget();

/// Runs fn(i) for i in [0, count) across up to `threads` workers in
/// contiguous ranges. Every index must write only to its own slots, so the
/// result is identical for any thread count.
void parallel_for(std::size_t count, std::size_t threads,
                  const std::function<void(std::size_t)>& fn);

} // namespace ldvae
