#pragma once

/* Exact arithmetic in Z/ellZ for an odd prime ell of at most 1024 bits.
 *
 * Residues are fixed-capacity limb arrays; only the first limbs() limbs of
 * a Residue are significant and the remaining ones are always zero, so
 * equality and hashing can look at the whole array. The modulus object owns
 * the limb count and carries all arithmetic; Residue itself is plain data. */

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "sldlag/rng.hpp"

namespace sldlag {

inline constexpr std::size_t kMaxLimbs = 16;
inline constexpr unsigned kMaxModulusBits = 1024;
using Limb = std::uint64_t;

struct Residue {
    std::array<Limb, kMaxLimbs> limb{};

    bool operator==(Residue const &) const = default;
};

enum class ArithOp { Add, Sub, Mul };

class PrimeModulus {
  public:
    /* Placeholder with no value; only assignment is meaningful. */
    PrimeModulus() = default;

    /* Parsers validate: odd, 2 <= bits <= 1024, probable prime with error
     * below 2^-64. */
    static PrimeModulus from_hex(std::string_view hex);
    static PrimeModulus from_decimal(std::string_view dec);
    static PrimeModulus from_word(std::uint64_t ell);
    static PrimeModulus from_bytes_be(std::span<std::uint8_t const> bytes);
    /* Random probable prime with exactly `bits` bits, deterministic in seed. */
    static PrimeModulus random_prime(unsigned bits, std::uint64_t seed);

    unsigned bit_length() const { return bits_; }
    std::size_t limbs() const { return nlimbs_; }
    /* Serialized width of one residue. */
    std::size_t byte_width() const { return (bits_ + 7) / 8; }
    Residue const & value() const { return ell_; }

    std::string to_hex() const;
    std::string to_decimal() const;
    std::vector<std::uint8_t> to_bytes_be() const;

    bool operator==(PrimeModulus const & o) const { return ell_ == o.ell_; }

    Residue zero() const { return Residue{}; }
    Residue one() const;
    Residue from_u64(std::uint64_t x) const;
    Residue from_i64(std::int64_t x) const;
    /* Reduces an arbitrary hexadecimal integer. */
    Residue residue_from_hex(std::string_view hex) const;
    std::string residue_to_hex(Residue const & a) const;
    std::string residue_to_decimal(Residue const & a) const;

    bool is_canonical(Residue const & a) const;
    bool is_zero(Residue const & a) const { return a == Residue{}; }
    bool is_one(Residue const & a) const;
    /* a == ell - 1 */
    bool is_minus_one(Residue const & a) const;
    /* Low 64 bits, meaningful when the residue is known to be small. */
    static std::uint64_t low_word(Residue const & a) { return a.limb[0]; }
    /* True and sets x when a < 2^63. */
    bool fits_u63(Residue const & a, std::uint64_t & x) const;

    Residue add(Residue const & a, Residue const & b) const;
    Residue sub(Residue const & a, Residue const & b) const;
    Residue neg(Residue const & a) const;
    Residue mul(Residue const & a, Residue const & b) const;
    Residue mul_small(Residue const & a, std::int64_t c) const;
    /* Throws NotInvertible on zero. */
    Residue inverse(Residue const & a) const;
    Residue pow(Residue const & a, std::uint64_t e) const;

    Residue random(Rng & rng) const;
    Residue random_nonzero(Rng & rng) const;

    /* Little-endian, byte_width() bytes. */
    void to_bytes(Residue const & a, std::span<std::uint8_t> out) const;
    /* Throws InvalidArgument if the value is not canonical. */
    Residue from_bytes(std::span<std::uint8_t const> in) const;

  private:
    static PrimeModulus from_limbs(std::span<Limb const> limbs);

    Residue ell_;
    std::size_t nlimbs_ = 0;
    unsigned bits_ = 0;
};

/* Canonical-form arithmetic with explicit operand validation. Non-canonical
 * operands are taken as belonging to some other modulus. */
Residue residue_arith(PrimeModulus const & p, Residue const & a,
                      Residue const & b, ArithOp op);

/* Sum of products with a single final reduction. */
class WideAccumulator {
  public:
    explicit WideAccumulator(PrimeModulus const & p);

    void clear();
    void add_product(Residue const & a, Residue const & b);
    void add(Residue const & a);
    Residue reduce() const;

  private:
    PrimeModulus const * p_;
    std::array<Limb, 2 * kMaxLimbs + 2> acc_{};
};

/* A residue bound to its modulus, for code that mixes values of possibly
 * different moduli (and for readable tests). */
class FieldElement {
  public:
    FieldElement(PrimeModulus const & p, Residue v);
    FieldElement(PrimeModulus const & p, std::int64_t v);

    Residue const & value() const { return v_; }
    PrimeModulus const & modulus() const { return *p_; }

    FieldElement operator+(FieldElement const & o) const;
    FieldElement operator-(FieldElement const & o) const;
    FieldElement operator*(FieldElement const & o) const;
    FieldElement inverse() const;
    bool operator==(FieldElement const & o) const;

  private:
    void check(FieldElement const & o) const;
    PrimeModulus const * p_;
    Residue v_;
};

/* Dot product of two equal-length residue vectors. */
Residue dot(PrimeModulus const & p, std::span<Residue const> a,
            std::span<Residue const> b);

} // namespace sldlag
