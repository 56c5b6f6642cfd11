#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace sldlag {

/* splitmix64 finalizer; used to derive independent stream seeds. */
constexpr std::uint64_t mix64(std::uint64_t z)
{
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

constexpr std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream)
{
    return mix64(seed ^ mix64(stream + 0x632be59bd9b4e019ULL));
}

/* Deterministic generator. The engine is std::mt19937_64, whose output
 * sequence is fixed by the standard; the distributions are written out
 * here because the std:: ones are implementation-defined. */
class Rng {
  public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next_u64() { return engine_(); }

    /* uniform in [0, bound), bound > 0 */
    std::uint64_t below(std::uint64_t bound)
    {
        std::uint64_t const limit = UINT64_MAX - (UINT64_MAX % bound);
        for (;;) {
            std::uint64_t const x = engine_();
            if (x < limit)
                return x % bound;
        }
    }

    /* uniform in [0, 1) with 53 random bits */
    double uniform() { return double(engine_() >> 11) * 0x1.0p-53; }

    /* Box-Muller; consumes exactly two draws per call */
    double normal(double mean, double stddev)
    {
        double u1 = uniform();
        double const u2 = uniform();
        if (u1 <= 0.0)
            u1 = 0x1.0p-53;
        double const r = std::sqrt(-2.0 * std::log(u1));
        return mean + stddev * r * std::cos(6.283185307179586 * u2);
    }

  private:
    std::mt19937_64 engine_;
};

} // namespace sldlag
