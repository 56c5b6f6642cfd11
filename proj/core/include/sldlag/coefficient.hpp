#pragma once

#include <cstdint>

#include "sldlag/modring.hpp"

namespace sldlag {

/* Values match the SLDM entry tags. */
enum class CoeffClass : std::uint8_t { PlusOne = 0, MinusOne = 1, Small = 2, Full = 3 };

/* Largest magnitude stored in the Small class; one signed machine word. */
inline constexpr std::int64_t kDefaultSmallMax = 2147483647;

struct Coefficient {
    CoeffClass cls = CoeffClass::PlusOne;
    std::int32_t small = 0; // Small only
    Residue full{};         // Full only

    static Coefficient plus_one() { return {CoeffClass::PlusOne, 0, {}}; }
    static Coefficient minus_one() { return {CoeffClass::MinusOne, 0, {}}; }
    static Coefficient small_value(std::int32_t v) { return {CoeffClass::Small, v, {}}; }
    static Coefficient full_value(Residue const & v) { return {CoeffClass::Full, 0, v}; }

    Residue value(PrimeModulus const & p) const
    {
        switch (cls) {
        case CoeffClass::PlusOne:
            return p.one();
        case CoeffClass::MinusOne:
            return p.neg(p.one());
        case CoeffClass::Small:
            return p.from_i64(small);
        case CoeffClass::Full:
            break;
        }
        return full;
    }

    bool operator==(Coefficient const &) const = default;
};

/* Smallest class representing the non-zero residue v. Small values are
 * stored with the representative of least magnitude. */
inline Coefficient classify(PrimeModulus const & p, Residue const & v,
                            std::int64_t small_max = kDefaultSmallMax)
{
    if (p.is_one(v))
        return Coefficient::plus_one();
    if (p.is_minus_one(v))
        return Coefficient::minus_one();
    std::uint64_t x = 0;
    if (p.fits_u63(v, x) && x <= std::uint64_t(small_max)) {
        /* prefer the negative representative when it is shorter */
        Residue const nv = p.neg(v);
        std::uint64_t y = 0;
        if (p.fits_u63(nv, y) && y < x)
            return Coefficient::small_value(-std::int32_t(y));
        return Coefficient::small_value(std::int32_t(x));
    }
    Residue const nv = p.neg(v);
    std::uint64_t y = 0;
    if (p.fits_u63(nv, y) && y <= std::uint64_t(small_max))
        return Coefficient::small_value(-std::int32_t(y));
    return Coefficient::full_value(v);
}

} // namespace sldlag
