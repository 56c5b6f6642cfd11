#pragma once

/* Conversions between Residue limb arrays and GMP integers. Kept out of
 * modring.hpp so that only code which needs big integers pulls in gmpxx. */

#include <span>
#include <vector>

#include <gmpxx.h>

#include "sldlag/modring.hpp"

namespace sldlag {

inline mpz_class to_mpz_raw(std::span<Limb const> limbs)
{
    mpz_class z;
    if (!limbs.empty())
        mpz_import(z.get_mpz_t(), limbs.size(), -1, sizeof(Limb), 0, 0, limbs.data());
    return z;
}

inline std::vector<Limb> limbs_from_mpz(mpz_class const & z)
{
    std::size_t const n = (mpz_sizeinbase(z.get_mpz_t(), 2) + 63) / 64;
    std::vector<Limb> out(n == 0 ? 1 : n, 0);
    std::size_t count = 0;
    mpz_export(out.data(), &count, -1, sizeof(Limb), 0, 0, z.get_mpz_t());
    return out;
}

inline mpz_class to_mpz(Residue const & a)
{
    return to_mpz_raw(std::span(a.limb.data(), kMaxLimbs));
}

/* Reduces an arbitrary (possibly negative) integer modulo ell. */
inline Residue residue_from_mpz(PrimeModulus const & p, mpz_class z)
{
    mpz_class const ell = to_mpz(p.value());
    mpz_fdiv_r(z.get_mpz_t(), z.get_mpz_t(), ell.get_mpz_t());
    Residue r;
    std::size_t count = 0;
    mpz_export(r.limb.data(), &count, -1, sizeof(Limb), 0, 0, z.get_mpz_t());
    return r;
}

} // namespace sldlag
