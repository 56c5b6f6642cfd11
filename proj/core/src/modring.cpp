#include "sldlag/modring.hpp"

#include <algorithm>
#include <cstring>

#include <gmp.h>

#include "sldlag/errors.hpp"
#include "sldlag/gmp_interop.hpp"

static_assert(sizeof(mp_limb_t) == sizeof(sldlag::Limb),
              "64-bit GMP limbs are required");

namespace sldlag {

namespace {

mp_limb_t * mp(Residue & a) { return reinterpret_cast<mp_limb_t *>(a.limb.data()); }
mp_limb_t const * mp(Residue const & a)
{
    return reinterpret_cast<mp_limb_t const *>(a.limb.data());
}

/* a >= b over n limbs */
bool geq(Limb const * a, Limb const * b, std::size_t n)
{
    for (std::size_t i = n; i-- > 0;) {
        if (a[i] != b[i])
            return a[i] > b[i];
    }
    return true;
}

} // namespace

PrimeModulus PrimeModulus::from_limbs(std::span<Limb const> limbs)
{
    std::size_t n = limbs.size();
    while (n > 0 && limbs[n - 1] == 0)
        --n;
    if (n == 0)
        throw InvalidArgument("modulus must be non-zero");
    if (n > kMaxLimbs)
        throw InvalidArgument("modulus exceeds 1024 bits");
    PrimeModulus p;
    std::copy_n(limbs.begin(), n, p.ell_.limb.begin());
    p.nlimbs_ = n;
    p.bits_ = unsigned(64 * n - __builtin_clzll(limbs[n - 1]));
    if (p.bits_ < 2 || p.bits_ > kMaxModulusBits)
        throw InvalidArgument("modulus bit length must be in [2, 1024]");
    if ((p.ell_.limb[0] & 1) == 0)
        throw InvalidArgument("modulus must be odd");
    mpz_class const z = to_mpz_raw(std::span(p.ell_.limb.data(), n));
    /* GMP runs BPSW plus (reps - 24) Miller-Rabin rounds. */
    if (mpz_probab_prime_p(z.get_mpz_t(), 32) == 0)
        throw InvalidArgument("modulus is not prime");
    return p;
}

PrimeModulus PrimeModulus::from_hex(std::string_view hex)
{
    mpz_class z;
    std::string s(hex);
    if (s.starts_with("0x") || s.starts_with("0X"))
        s = s.substr(2);
    if (s.empty() || z.set_str(s, 16) != 0)
        throw InvalidArgument("bad hexadecimal modulus: " + std::string(hex));
    auto limbs = limbs_from_mpz(z);
    return from_limbs(limbs);
}

PrimeModulus PrimeModulus::from_decimal(std::string_view dec)
{
    mpz_class z;
    if (dec.empty() || z.set_str(std::string(dec), 10) != 0)
        throw InvalidArgument("bad decimal modulus: " + std::string(dec));
    auto limbs = limbs_from_mpz(z);
    return from_limbs(limbs);
}

PrimeModulus PrimeModulus::from_word(std::uint64_t ell)
{
    Limb l = ell;
    return from_limbs(std::span(&l, 1));
}

PrimeModulus PrimeModulus::from_bytes_be(std::span<std::uint8_t const> bytes)
{
    mpz_class z;
    if (!bytes.empty())
        mpz_import(z.get_mpz_t(), bytes.size(), 1, 1, 1, 0, bytes.data());
    auto limbs = limbs_from_mpz(z);
    return from_limbs(limbs);
}

PrimeModulus PrimeModulus::random_prime(unsigned bits, std::uint64_t seed)
{
    if (bits < 2 || bits > kMaxModulusBits)
        throw InvalidArgument("prime bit length must be in [2, 1024]");
    Rng rng(derive_seed(seed, 0x656c6cULL));
    for (;;) {
        std::vector<Limb> limbs((bits + 63) / 64);
        for (auto & l : limbs)
            l = rng.next_u64();
        unsigned const top = (bits - 1) % 64;
        limbs.back() &= (top == 63) ? ~Limb(0) : ((Limb(1) << (top + 1)) - 1);
        limbs.back() |= Limb(1) << top;
        limbs[0] |= 1;
        mpz_class z = to_mpz_raw(limbs);
        if (mpz_probab_prime_p(z.get_mpz_t(), 32) == 0)
            mpz_nextprime(z.get_mpz_t(), z.get_mpz_t());
        if (mpz_sizeinbase(z.get_mpz_t(), 2) != bits)
            continue;
        auto l = limbs_from_mpz(z);
        return from_limbs(l);
    }
}

std::string PrimeModulus::to_hex() const { return residue_to_hex(ell_); }

std::string PrimeModulus::to_decimal() const { return residue_to_decimal(ell_); }

std::vector<std::uint8_t> PrimeModulus::to_bytes_be() const
{
    std::vector<std::uint8_t> out(byte_width());
    for (std::size_t i = 0; i < out.size(); ++i) {
        std::size_t const bit = 8 * i;
        out[out.size() - 1 - i] = std::uint8_t(ell_.limb[bit / 64] >> (bit % 64));
    }
    return out;
}

Residue PrimeModulus::one() const { return from_u64(1); }

Residue PrimeModulus::from_u64(std::uint64_t x) const
{
    Residue r;
    if (nlimbs_ == 1 && x >= ell_.limb[0])
        x %= ell_.limb[0];
    r.limb[0] = x;
    return r;
}

Residue PrimeModulus::from_i64(std::int64_t x) const
{
    if (x >= 0)
        return from_u64(std::uint64_t(x));
    std::uint64_t const mag = std::uint64_t(0) - std::uint64_t(x);
    return neg(from_u64(mag));
}

Residue PrimeModulus::residue_from_hex(std::string_view hex) const
{
    mpz_class z;
    std::string s(hex);
    if (s.starts_with("0x") || s.starts_with("0X"))
        s = s.substr(2);
    if (s.empty() || z.set_str(s, 16) != 0)
        throw InvalidArgument("bad hexadecimal residue: " + std::string(hex));
    return residue_from_mpz(*this, z);
}

std::string PrimeModulus::residue_to_hex(Residue const & a) const
{
    return to_mpz_raw(std::span(a.limb.data(), kMaxLimbs)).get_str(16);
}

std::string PrimeModulus::residue_to_decimal(Residue const & a) const
{
    return to_mpz_raw(std::span(a.limb.data(), kMaxLimbs)).get_str(10);
}

bool PrimeModulus::is_canonical(Residue const & a) const
{
    for (std::size_t i = nlimbs_; i < kMaxLimbs; ++i)
        if (a.limb[i] != 0)
            return false;
    return !geq(a.limb.data(), ell_.limb.data(), nlimbs_);
}

bool PrimeModulus::is_one(Residue const & a) const
{
    if (a.limb[0] != 1)
        return false;
    for (std::size_t i = 1; i < nlimbs_; ++i)
        if (a.limb[i] != 0)
            return false;
    return true;
}

bool PrimeModulus::is_minus_one(Residue const & a) const
{
    if (a.limb[0] != ell_.limb[0] - 1)
        return false;
    for (std::size_t i = 1; i < nlimbs_; ++i)
        if (a.limb[i] != ell_.limb[i])
            return false;
    return true;
}

bool PrimeModulus::fits_u63(Residue const & a, std::uint64_t & x) const
{
    for (std::size_t i = 1; i < nlimbs_; ++i)
        if (a.limb[i] != 0)
            return false;
    if (a.limb[0] >> 63)
        return false;
    x = a.limb[0];
    return true;
}

Residue PrimeModulus::add(Residue const & a, Residue const & b) const
{
    Residue r;
    if (nlimbs_ == 1) {
        Limb const m = ell_.limb[0];
        Limb s = a.limb[0] + b.limb[0];
        if (s < a.limb[0] || s >= m)
            s -= m;
        r.limb[0] = s;
        return r;
    }
    mp_limb_t const carry = mpn_add_n(mp(r), mp(a), mp(b), mp_size_t(nlimbs_));
    if (carry || geq(r.limb.data(), ell_.limb.data(), nlimbs_))
        mpn_sub_n(mp(r), mp(r), mp(ell_), mp_size_t(nlimbs_));
    return r;
}

Residue PrimeModulus::sub(Residue const & a, Residue const & b) const
{
    Residue r;
    if (nlimbs_ == 1) {
        Limb const m = ell_.limb[0];
        r.limb[0] = a.limb[0] >= b.limb[0] ? a.limb[0] - b.limb[0]
                                           : a.limb[0] + (m - b.limb[0]);
        return r;
    }
    mp_limb_t const borrow = mpn_sub_n(mp(r), mp(a), mp(b), mp_size_t(nlimbs_));
    if (borrow)
        mpn_add_n(mp(r), mp(r), mp(ell_), mp_size_t(nlimbs_));
    return r;
}

Residue PrimeModulus::neg(Residue const & a) const
{
    if (is_zero(a))
        return a;
    Residue r;
    mpn_sub_n(mp(r), mp(ell_), mp(a), mp_size_t(nlimbs_));
    return r;
}

Residue PrimeModulus::mul(Residue const & a, Residue const & b) const
{
    Residue r;
    if (nlimbs_ == 1) {
        unsigned __int128 const p = (unsigned __int128)a.limb[0] * b.limb[0];
        r.limb[0] = Limb(p % ell_.limb[0]);
        return r;
    }
    std::array<mp_limb_t, 2 * kMaxLimbs> prod;
    std::array<mp_limb_t, kMaxLimbs + 1> q;
    mpn_mul_n(prod.data(), mp(a), mp(b), mp_size_t(nlimbs_));
    mpn_tdiv_qr(q.data(), mp(r), 0, prod.data(), mp_size_t(2 * nlimbs_),
                mp(ell_), mp_size_t(nlimbs_));
    return r;
}

Residue PrimeModulus::mul_small(Residue const & a, std::int64_t c) const
{
    std::uint64_t const mag = c < 0 ? std::uint64_t(0) - std::uint64_t(c) : std::uint64_t(c);
    Residue r;
    std::array<mp_limb_t, kMaxLimbs + 1> prod{};
    std::array<mp_limb_t, 2> q;
    prod[nlimbs_] = mpn_mul_1(prod.data(), mp(a), mp_size_t(nlimbs_), mag);
    mpn_tdiv_qr(q.data(), mp(r), 0, prod.data(), mp_size_t(nlimbs_ + 1), mp(ell_),
                mp_size_t(nlimbs_));
    return c < 0 ? neg(r) : r;
}

Residue PrimeModulus::inverse(Residue const & a) const
{
    if (is_zero(a))
        throw NotInvertible("zero has no inverse modulo ell");
    mpz_class const za = to_mpz_raw(std::span(a.limb.data(), nlimbs_));
    mpz_class const zl = to_mpz_raw(std::span(ell_.limb.data(), nlimbs_));
    mpz_class inv;
    if (mpz_invert(inv.get_mpz_t(), za.get_mpz_t(), zl.get_mpz_t()) == 0)
        throw NotInvertible("value is not invertible modulo ell");
    return residue_from_mpz(*this, inv);
}

Residue PrimeModulus::pow(Residue const & a, std::uint64_t e) const
{
    Residue result = one();
    Residue base = a;
    while (e) {
        if (e & 1)
            result = mul(result, base);
        base = mul(base, base);
        e >>= 1;
    }
    return result;
}

Residue PrimeModulus::random(Rng & rng) const
{
    unsigned const top = (bits_ - 1) % 64;
    Limb const mask = top == 63 ? ~Limb(0) : ((Limb(1) << (top + 1)) - 1);
    for (;;) {
        Residue r;
        for (std::size_t i = 0; i < nlimbs_; ++i)
            r.limb[i] = rng.next_u64();
        r.limb[nlimbs_ - 1] &= mask;
        if (!geq(r.limb.data(), ell_.limb.data(), nlimbs_))
            return r;
    }
}

Residue PrimeModulus::random_nonzero(Rng & rng) const
{
    for (;;) {
        Residue r = random(rng);
        if (!is_zero(r))
            return r;
    }
}

void PrimeModulus::to_bytes(Residue const & a, std::span<std::uint8_t> out) const
{
    std::size_t const w = byte_width();
    for (std::size_t i = 0; i < w; ++i)
        out[i] = std::uint8_t(a.limb[i / 8] >> (8 * (i % 8)));
}

Residue PrimeModulus::from_bytes(std::span<std::uint8_t const> in) const
{
    std::size_t const w = byte_width();
    if (in.size() < w)
        throw InvalidArgument("residue byte string too short");
    Residue r;
    for (std::size_t i = 0; i < w; ++i)
        r.limb[i / 8] |= Limb(in[i]) << (8 * (i % 8));
    if (!is_canonical(r))
        throw InvalidArgument("residue is not canonical");
    return r;
}

Residue residue_arith(PrimeModulus const & p, Residue const & a,
                      Residue const & b, ArithOp op)
{
    if (!p.is_canonical(a) || !p.is_canonical(b))
        throw ModulusMismatch("operand is not a canonical residue of this modulus");
    switch (op) {
    case ArithOp::Add:
        return p.add(a, b);
    case ArithOp::Sub:
        return p.sub(a, b);
    case ArithOp::Mul:
        return p.mul(a, b);
    }
    throw InvalidArgument("unknown arithmetic operation");
}

WideAccumulator::WideAccumulator(PrimeModulus const & p) : p_(&p) {}

void WideAccumulator::clear() { acc_.fill(0); }

void WideAccumulator::add_product(Residue const & a, Residue const & b)
{
    std::size_t const n = p_->limbs();
    if (n == 1) {
        unsigned __int128 const prod = (unsigned __int128)a.limb[0] * b.limb[0];
        unsigned __int128 lo = ((unsigned __int128)acc_[1] << 64) | acc_[0];
        lo += prod;
        if (lo < prod)
            ++acc_[2];
        acc_[0] = Limb(lo);
        acc_[1] = Limb(lo >> 64);
        return;
    }
    std::array<mp_limb_t, 2 * kMaxLimbs> prod;
    mpn_mul_n(prod.data(), mp(a), mp(b), mp_size_t(n));
    mpn_add(acc_.data(), acc_.data(), mp_size_t(2 * n + 2), prod.data(),
            mp_size_t(2 * n));
}

void WideAccumulator::add(Residue const & a)
{
    std::size_t const n = p_->limbs();
    mpn_add(acc_.data(), acc_.data(), mp_size_t(2 * n + 2), mp(a), mp_size_t(n));
}

Residue WideAccumulator::reduce() const
{
    std::size_t const n = p_->limbs();
    Residue r;
    std::array<mp_limb_t, kMaxLimbs + 3> q;
    mpn_tdiv_qr(q.data(), mp(r), 0, acc_.data(), mp_size_t(2 * n + 2),
                mp(p_->value()), mp_size_t(n));
    return r;
}

FieldElement::FieldElement(PrimeModulus const & p, Residue v) : p_(&p), v_(v)
{
    if (!p.is_canonical(v))
        throw ModulusMismatch("value is not canonical for this modulus");
}

FieldElement::FieldElement(PrimeModulus const & p, std::int64_t v)
    : p_(&p), v_(p.from_i64(v))
{
}

void FieldElement::check(FieldElement const & o) const
{
    if (!(*p_ == *o.p_))
        throw ModulusMismatch("operands belong to different moduli");
}

FieldElement FieldElement::operator+(FieldElement const & o) const
{
    check(o);
    return {*p_, p_->add(v_, o.v_)};
}

FieldElement FieldElement::operator-(FieldElement const & o) const
{
    check(o);
    return {*p_, p_->sub(v_, o.v_)};
}

FieldElement FieldElement::operator*(FieldElement const & o) const
{
    check(o);
    return {*p_, p_->mul(v_, o.v_)};
}

FieldElement FieldElement::inverse() const { return {*p_, p_->inverse(v_)}; }

bool FieldElement::operator==(FieldElement const & o) const
{
    check(o);
    return v_ == o.v_;
}

Residue dot(PrimeModulus const & p, std::span<Residue const> a,
            std::span<Residue const> b)
{
    if (a.size() != b.size())
        throw DimensionMismatch("dot product of vectors of different lengths");
    WideAccumulator acc(p);
    for (std::size_t i = 0; i < a.size(); ++i)
        acc.add_product(a[i], b[i]);
    return acc.reduce();
}

} // namespace sldlag
