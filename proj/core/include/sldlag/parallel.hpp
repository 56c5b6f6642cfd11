#pragma once

#include <cstddef>
#include <functional>

namespace sldlag {

/* Concurrency cap from SLDLAG_CONTEXTS (default 1, invalid values are
 * treated as 1). */
unsigned contexts_from_env();

/* Runs fn(0) .. fn(count - 1) on at most `contexts` threads. Work items are
 * assigned statically (item t goes to thread t mod contexts), so anything an
 * item writes only to its own slot is scheduling independent. The first
 * exception thrown, in item order, is rethrown after all threads join. */
void parallel_for(std::size_t count, unsigned contexts, std::function<void(std::size_t)> const & fn);

} // namespace sldlag
