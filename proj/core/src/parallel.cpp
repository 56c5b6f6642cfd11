#include "sldlag/parallel.hpp"

#include <cstdlib>
#include <exception>
#include <string>
#include <thread>
#include <vector>

namespace sldlag {

unsigned contexts_from_env()
{
    char const * s = std::getenv("SLDLAG_CONTEXTS");
    if (!s || !*s)
        return 1;
    char * end = nullptr;
    unsigned long const v = std::strtoul(s, &end, 10);
    if (*end != '\0' || v == 0)
        return 1;
    return unsigned(std::min<unsigned long>(v, 1024));
}

void parallel_for(std::size_t count, unsigned contexts, std::function<void(std::size_t)> const & fn)
{
    if (contexts <= 1 || count <= 1) {
        for (std::size_t t = 0; t < count; ++t)
            fn(t);
        return;
    }
    std::size_t const nthreads = std::min<std::size_t>(contexts, count);
    std::vector<std::exception_ptr> errors(count);
    std::vector<std::thread> threads;
    threads.reserve(nthreads);
    for (std::size_t th = 0; th < nthreads; ++th) {
        threads.emplace_back([&, th] {
            for (std::size_t t = th; t < count; t += nthreads) {
                try {
                    fn(t);
                } catch (...) {
                    errors[t] = std::current_exception();
                }
            }
        });
    }
    for (auto & t : threads)
        t.join();
    for (auto & e : errors)
        if (e)
            std::rethrow_exception(e);
}

} // namespace sldlag
