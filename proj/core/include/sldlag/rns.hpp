#pragma once

/* Residue number system carrier for reduction-free accumulation.
 *
 * An integer X in [0, M) is represented by its residues modulo k pairwise
 * coprime word-sized primes m_1..m_k (M is their product). Row dot products
 * of the SpMV are accumulated limb-wise without any multi-precision carry;
 * the result is brought back to Z/ellZ once per row. Exactness requires the
 * accumulated integer to stay below the capacity bound, which the context
 * derives from the maximal row weight and the maximal coefficient size. */

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "sldlag/coefficient.hpp"
#include "sldlag/modring.hpp"

namespace sldlag {

struct RnsValue {
    std::vector<std::uint64_t> limbs;

    bool operator==(RnsValue const &) const = default;
};

class RnsContext {
  public:
    /* capacity_bound = max_terms * max_coeff * ell, where max_coeff bounds
     * |c| for every coefficient (small_max, raised to ell - 1 when Full
     * coefficients may occur). */
    RnsContext(PrimeModulus const & ell, std::uint64_t max_terms,
               std::uint64_t small_max, bool has_full);

    PrimeModulus const & modulus() const { return ell_; }
    std::size_t size() const { return moduli_.size(); }
    std::span<std::uint64_t const> moduli() const { return moduli_; }
    std::uint64_t max_terms() const { return max_terms_; }
    std::uint64_t small_max() const { return small_max_; }
    bool has_full() const { return has_full_; }
    /* Hexadecimal capacity bound and modulus product, for diagnostics. */
    std::string capacity_hex() const;
    std::string product_hex() const;
    unsigned capacity_bits() const;

    /* Enables the big-integer shadow check in rns_dot_accumulate. On by
     * default in debug builds. */
    void set_checked(bool on) { checked_ = on; }
    bool checked() const { return checked_; }

    RnsValue zero() const { return {std::vector<std::uint64_t>(size(), 0)}; }
    RnsValue to_rns(Residue const & a) const;
    /* Exact CRT reconstruction through big integers, reduced mod ell. */
    Residue from_rns(RnsValue const & v) const;

    /* Bulk conversion into entry-major storage: out[t * k + i] holds
     * in[t] mod m_i; neg_out holds (ell - in[t]) mod m_i. */
    void to_rns_bulk(std::span<Residue const> in, std::span<std::uint64_t> out,
                     std::span<std::uint64_t> neg_out) const;
    /* Fast reconstruction from per-limb residues (each < m_i); valid for
     * represented integers up to capacity_bound. */
    Residue reconstruct(std::uint64_t const * limbs) const;

    std::uint64_t ell_mod(std::size_t i) const { return ell_rns_[i]; }

  private:
    PrimeModulus ell_;
    std::uint64_t max_terms_;
    std::uint64_t small_max_;
    bool has_full_;
    bool checked_;
    std::vector<std::uint64_t> moduli_;
    std::vector<std::uint64_t> crt_inv_;       // (M/m_i)^-1 mod m_i
    std::vector<std::uint64_t> crt_inv_shoup_; // floor(crt_inv * 2^64 / m_i)
    std::vector<double> inv_moduli_;
    std::vector<Residue> cofactor_mod_ell_; // (M/m_i) mod ell
    Residue minus_product_mod_ell_;         // (-M) mod ell
    std::vector<std::uint64_t> ell_rns_;
    std::vector<Limb> capacity_;
    std::vector<Limb> product_;
};

/* Largest primes below 2^63 in descending order (first `count`). */
std::vector<std::uint64_t> rns_primes(std::size_t count);

inline std::uint64_t mulmod_u64(std::uint64_t a, std::uint64_t b, std::uint64_t m)
{
    return std::uint64_t((unsigned __int128)a * b % m);
}

/* Sum of coeff_t * input_t, accumulated limb-wise. +1/-1 terms only add;
 * negative terms are accumulated as |c| * (ell - x) so that the represented
 * integer stays non-negative. */
RnsValue rns_dot_accumulate(std::span<Coefficient const> coeffs,
                            std::span<RnsValue const> inputs, RnsContext const & ctx);

} // namespace sldlag
