#include "sldlag/rns.hpp"

#include <algorithm>
#include <cmath>
#include <mutex>

#include <gmp.h>

#include "sldlag/errors.hpp"
#include "sldlag/gmp_interop.hpp"

namespace sldlag {

namespace {

std::uint64_t powmod_u64(std::uint64_t a, std::uint64_t e, std::uint64_t m)
{
    std::uint64_t r = 1;
    a %= m;
    while (e) {
        if (e & 1)
            r = mulmod_u64(r, a, m);
        a = mulmod_u64(a, a, m);
        e >>= 1;
    }
    return r;
}

/* Deterministic for all 64-bit inputs with these bases. */
bool is_prime_u64(std::uint64_t n)
{
    if (n < 2)
        return false;
    for (std::uint64_t p : {2ULL, 3ULL, 5ULL, 7ULL, 11ULL, 13ULL, 17ULL, 19ULL, 23ULL, 29ULL, 31ULL, 37ULL}) {
        if (n % p == 0)
            return n == p;
    }
    std::uint64_t d = n - 1;
    unsigned s = 0;
    while ((d & 1) == 0) {
        d >>= 1;
        ++s;
    }
    for (std::uint64_t a : {2ULL, 325ULL, 9375ULL, 28178ULL, 450775ULL, 9780504ULL, 1795265022ULL}) {
        std::uint64_t x = powmod_u64(a, d, n);
        if (x == 0 || x == 1 || x == n - 1)
            continue;
        bool composite = true;
        for (unsigned r = 1; r < s; ++r) {
            x = mulmod_u64(x, x, n);
            if (x == n - 1) {
                composite = false;
                break;
            }
        }
        if (composite)
            return false;
    }
    return true;
}

std::uint64_t shoup_precompute(std::uint64_t w, std::uint64_t m)
{
    return std::uint64_t(((unsigned __int128)w << 64) / m);
}

/* a * w mod m for a < 2^64, m < 2^63 */
std::uint64_t mulmod_shoup(std::uint64_t a, std::uint64_t w, std::uint64_t wp, std::uint64_t m)
{
    std::uint64_t const q = std::uint64_t(((unsigned __int128)a * wp) >> 64);
    std::uint64_t r = a * w - q * m;
    return r >= m ? r - m : r;
}

/* Integer in [0, M) represented by v, without reduction mod ell. */
mpz_class exact_integer(RnsValue const & v, RnsContext const & ctx)
{
    mpz_class product = 1;
    for (auto m : ctx.moduli())
        product *= mpz_class(static_cast<unsigned long>(m));
    mpz_class x = 0;
    for (std::size_t i = 0; i < ctx.size(); ++i) {
        mpz_class const mi(static_cast<unsigned long>(ctx.moduli()[i]));
        mpz_class const cof = product / mi;
        mpz_class inv;
        mpz_class const cofm = cof % mi;
        mpz_invert(inv.get_mpz_t(), cofm.get_mpz_t(), mi.get_mpz_t());
        x += ((mpz_class(static_cast<unsigned long>(v.limbs[i])) * inv) % mi) * cof;
    }
    return x % product;
}

} // namespace

std::vector<std::uint64_t> rns_primes(std::size_t count)
{
    static std::mutex lock;
    static std::vector<std::uint64_t> cache;
    std::lock_guard<std::mutex> guard(lock);
    std::uint64_t candidate = cache.empty() ? (std::uint64_t(1) << 63) - 1 : cache.back() - 2;
    while (cache.size() < count) {
        if (is_prime_u64(candidate))
            cache.push_back(candidate);
        candidate -= 2;
    }
    return {cache.begin(), cache.begin() + std::ptrdiff_t(count)};
}

RnsContext::RnsContext(PrimeModulus const & ell, std::uint64_t max_terms,
                       std::uint64_t small_max, bool has_full)
    : ell_(ell), max_terms_(std::max<std::uint64_t>(max_terms, 1)),
      small_max_(std::max<std::uint64_t>(small_max, 1)), has_full_(has_full),
#ifdef NDEBUG
      checked_(false)
#else
      checked_(true)
#endif
{
    mpz_class const zell = to_mpz(ell.value());
    mpz_class coeff = small_max_;
    if (has_full_ && coeff < zell - 1)
        coeff = zell - 1;
    mpz_class const capacity = mpz_class(max_terms_) * coeff * zell;
    capacity_ = limbs_from_mpz(capacity);

    /* smallest k with M > 2 * capacity: keeps the reconstructed fraction
     * X/M below 1/2 so the floating estimate of the CRT quotient is safe */
    mpz_class const target = 2 * capacity;
    std::size_t k = 1;
    mpz_class product;
    for (;; ++k) {
        moduli_ = rns_primes(k);
        product = 1;
        for (auto m : moduli_)
            product *= mpz_class(static_cast<unsigned long>(m));
        if (product > target)
            break;
    }
    product_ = limbs_from_mpz(product);

    crt_inv_.resize(k);
    crt_inv_shoup_.resize(k);
    inv_moduli_.resize(k);
    cofactor_mod_ell_.resize(k);
    ell_rns_.resize(k);
    for (std::size_t i = 0; i < k; ++i) {
        mpz_class const mi(static_cast<unsigned long>(moduli_[i]));
        mpz_class const cof = product / mi;
        mpz_class inv;
        mpz_class const cofm = cof % mi;
        mpz_invert(inv.get_mpz_t(), cofm.get_mpz_t(), mi.get_mpz_t());
        crt_inv_[i] = mpz_get_ui(inv.get_mpz_t());
        crt_inv_shoup_[i] = shoup_precompute(crt_inv_[i], moduli_[i]);
        inv_moduli_[i] = 1.0 / double(moduli_[i]);
        cofactor_mod_ell_[i] = residue_from_mpz(ell, cof);
        mpz_class const er = zell % mi;
        ell_rns_[i] = mpz_get_ui(er.get_mpz_t());
    }
    minus_product_mod_ell_ = residue_from_mpz(ell, -product);
}

std::string RnsContext::capacity_hex() const
{
    return to_mpz_raw(capacity_).get_str(16);
}

std::string RnsContext::product_hex() const
{
    return to_mpz_raw(product_).get_str(16);
}

unsigned RnsContext::capacity_bits() const
{
    return unsigned(mpz_sizeinbase(to_mpz_raw(capacity_).get_mpz_t(), 2));
}

RnsValue RnsContext::to_rns(Residue const & a) const
{
    RnsValue v;
    v.limbs.resize(size());
    auto const * src = reinterpret_cast<mp_limb_t const *>(a.limb.data());
    for (std::size_t i = 0; i < size(); ++i)
        v.limbs[i] = mpn_mod_1(src, mp_size_t(ell_.limbs()), moduli_[i]);
    return v;
}

Residue RnsContext::from_rns(RnsValue const & v) const
{
    if (v.limbs.size() != size())
        throw DimensionMismatch("RNS value has the wrong number of limbs");
    mpz_class const product = to_mpz_raw(product_);
    mpz_class x = 0;
    for (std::size_t i = 0; i < size(); ++i) {
        mpz_class const mi(static_cast<unsigned long>(moduli_[i]));
        mpz_class const cof = product / mi;
        mpz_class const t(static_cast<unsigned long>(mulmod_u64(v.limbs[i] % moduli_[i], crt_inv_[i], moduli_[i])));
        x += t * cof;
    }
    x %= product;
    return residue_from_mpz(ell_, x);
}

void RnsContext::to_rns_bulk(std::span<Residue const> in, std::span<std::uint64_t> out,
                             std::span<std::uint64_t> neg_out) const
{
    std::size_t const n = in.size();
    std::size_t const k = size();
    if (out.size() < k * n || neg_out.size() < k * n)
        throw DimensionMismatch("RNS buffer too small");
    mp_size_t const nl = mp_size_t(ell_.limbs());
    for (std::size_t t = 0; t < n; ++t) {
        auto const * src = reinterpret_cast<mp_limb_t const *>(in[t].limb.data());
        for (std::size_t i = 0; i < k; ++i) {
            std::uint64_t const m = moduli_[i];
            std::uint64_t const x = nl == 1 ? src[0] % m : mpn_mod_1(src, nl, m);
            out[t * k + i] = x;
            std::uint64_t const e = ell_rns_[i];
            neg_out[t * k + i] = e >= x ? e - x : e + (m - x);
        }
    }
}

Residue RnsContext::reconstruct(std::uint64_t const * limbs) const
{
    std::size_t const k = size();
    std::size_t const n = ell_.limbs();
    std::array<mp_limb_t, kMaxLimbs + 2> acc{};
    double frac = 0.25;
    for (std::size_t i = 0; i < k; ++i) {
        std::uint64_t const t = mulmod_shoup(limbs[i], crt_inv_[i], crt_inv_shoup_[i], moduli_[i]);
        frac += double(t) * inv_moduli_[i];
        auto const * c = reinterpret_cast<mp_limb_t const *>(cofactor_mod_ell_[i].limb.data());
        mp_limb_t const carry = mpn_addmul_1(acc.data(), c, mp_size_t(n), t);
        mpn_add_1(acc.data() + n, acc.data() + n, 2, carry);
    }
    /* X = sum t_i M/m_i - alpha M, alpha = floor(sum t_i / m_i) */
    auto const alpha = std::uint64_t(std::floor(frac));
    if (alpha) {
        auto const * c = reinterpret_cast<mp_limb_t const *>(minus_product_mod_ell_.limb.data());
        mp_limb_t const carry = mpn_addmul_1(acc.data(), c, mp_size_t(n), alpha);
        mpn_add_1(acc.data() + n, acc.data() + n, 2, carry);
    }
    Residue r;
    std::array<mp_limb_t, 4> q;
    mpn_tdiv_qr(q.data(), reinterpret_cast<mp_limb_t *>(r.limb.data()), 0, acc.data(),
                mp_size_t(n + 2), reinterpret_cast<mp_limb_t const *>(ell_.value().limb.data()),
                mp_size_t(n));
    return r;
}

RnsValue rns_dot_accumulate(std::span<Coefficient const> coeffs,
                            std::span<RnsValue const> inputs, RnsContext const & ctx)
{
    if (coeffs.size() != inputs.size())
        throw DimensionMismatch("coefficient and input lists differ in length");
    std::size_t const k = ctx.size();
    PrimeModulus const & p = ctx.modulus();

    if (ctx.checked()) {
        /* shadow accumulation of the exact integer the limbs represent */
        if (coeffs.size() > ctx.max_terms())
            throw ContractViolation("row has more terms than the RNS context allows");
        mpz_class exact = 0;
        mpz_class const ell = to_mpz(p.value());
        mpz_class const capacity(ctx.capacity_hex(), 16);
        for (std::size_t t = 0; t < coeffs.size(); ++t) {
            mpz_class const x = exact_integer(inputs[t], ctx);
            Coefficient const & c = coeffs[t];
            switch (c.cls) {
            case CoeffClass::PlusOne:
                exact += x;
                break;
            case CoeffClass::MinusOne:
                exact += ell - x;
                break;
            case CoeffClass::Small:
                if (std::uint64_t(c.small < 0 ? -std::int64_t(c.small) : c.small) > ctx.small_max())
                    throw ContractViolation("small coefficient exceeds the declared bound");
                if (c.small < 0)
                    exact += mpz_class(-static_cast<long>(c.small)) * (ell - x);
                else
                    exact += mpz_class(static_cast<long>(c.small)) * x;
                break;
            case CoeffClass::Full:
                if (!ctx.has_full())
                    throw ContractViolation("full coefficient in a small-only RNS context");
                exact += to_mpz(c.full) * x;
                break;
            }
        }
        if (exact > capacity)
            throw ContractViolation("accumulated value exceeds the RNS capacity bound");
    }

    RnsValue out = ctx.zero();
    for (std::size_t i = 0; i < k; ++i) {
        std::uint64_t const m = ctx.moduli()[i];
        std::uint64_t const e = ctx.ell_mod(i);
        unsigned __int128 acc = 0;
        for (std::size_t t = 0; t < coeffs.size(); ++t) {
            std::uint64_t const x = inputs[t].limbs[i];
            std::uint64_t const nx = e >= x ? e - x : e + (m - x);
            Coefficient const & c = coeffs[t];
            switch (c.cls) {
            case CoeffClass::PlusOne:
                acc += x;
                break;
            case CoeffClass::MinusOne:
                acc += nx;
                break;
            case CoeffClass::Small:
                if (c.small < 0)
                    acc += (unsigned __int128)std::uint64_t(-std::int64_t(c.small)) * nx;
                else
                    acc += (unsigned __int128)std::uint64_t(c.small) * x;
                break;
            case CoeffClass::Full: {
                auto const * f = reinterpret_cast<mp_limb_t const *>(c.full.limb.data());
                std::uint64_t const cm = mpn_mod_1(f, mp_size_t(p.limbs()), m);
                acc += mulmod_u64(cm, x, m);
                break;
            }
            }
        }
        out.limbs[i] = std::uint64_t(acc % m);
    }
    return out;
}

} // namespace sldlag
