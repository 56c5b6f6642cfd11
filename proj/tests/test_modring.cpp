#include <gtest/gtest.h>

#include <gmpxx.h>

#include "sldlag/errors.hpp"
#include "sldlag/gmp_interop.hpp"
#include "sldlag/coefficient.hpp"
#include "sldlag/modring.hpp"

using namespace sldlag;

namespace {

/* 2^191 - 19 */
PrimeModulus p191()
{
    mpz_class z = 1;
    z <<= 191;
    z -= 19;
    return PrimeModulus::from_hex(z.get_str(16));
}

} // namespace

TEST(Modring, SmallFieldExamples)
{
    auto const p = PrimeModulus::from_word(7);
    EXPECT_EQ(p.low_word(residue_arith(p, p.from_u64(3), p.from_u64(5), ArithOp::Add)), 1u);
    EXPECT_EQ(p.low_word(p.inverse(p.from_u64(2))), 4u);
    EXPECT_EQ(p.inverse(p.one()), p.one());
    EXPECT_THROW(p.inverse(p.zero()), NotInvertible);
    Rng rng(1);
    for (int i = 0; i < 20; ++i)
        EXPECT_TRUE(p.is_zero(p.mul(p.random(rng), p.zero())));
}

TEST(Modring, RejectsBadModuli)
{
    EXPECT_THROW(PrimeModulus::from_word(9), InvalidArgument);
    EXPECT_THROW(PrimeModulus::from_word(2), InvalidArgument);
    EXPECT_THROW(PrimeModulus::from_word(0), InvalidArgument);
    EXPECT_THROW(PrimeModulus::from_hex("zz"), InvalidArgument);
    mpz_class big = 1;
    big <<= 1030;
    mpz_nextprime(big.get_mpz_t(), big.get_mpz_t());
    EXPECT_THROW(PrimeModulus::from_hex(big.get_str(16)), InvalidArgument);
}

TEST(Modring, ArithmeticAgainstBigIntegerOracle)
{
    for (auto const & p : {p191(), PrimeModulus::random_prime(64, 3),
                           PrimeModulus::random_prime(200, 4), PrimeModulus::random_prime(1024, 5),
                           PrimeModulus::random_prime(61, 6), PrimeModulus::from_word(1009)}) {
        mpz_class const ell = to_mpz(p.value());
        Rng rng(77);
        for (int t = 0; t < 2000; ++t) {
            Residue const a = p.random(rng);
            Residue const b = p.random(rng);
            mpz_class const za = to_mpz(a), zb = to_mpz(b);
            mpz_class r;
            r = za * zb;
            mpz_mod(r.get_mpz_t(), r.get_mpz_t(), ell.get_mpz_t());
            ASSERT_EQ(to_mpz(residue_arith(p, a, b, ArithOp::Mul)), r);
            r = za + zb;
            mpz_mod(r.get_mpz_t(), r.get_mpz_t(), ell.get_mpz_t());
            ASSERT_EQ(to_mpz(residue_arith(p, a, b, ArithOp::Add)), r);
            r = za - zb;
            mpz_mod(r.get_mpz_t(), r.get_mpz_t(), ell.get_mpz_t());
            ASSERT_EQ(to_mpz(residue_arith(p, a, b, ArithOp::Sub)), r);
            if (!p.is_zero(a))
                ASSERT_TRUE(p.is_one(p.mul(a, p.inverse(a))));
            std::int64_t const c = std::int64_t(rng.next_u64() >> 33) - (1LL << 30);
            r = za * c;
            mpz_mod(r.get_mpz_t(), r.get_mpz_t(), ell.get_mpz_t());
            ASSERT_EQ(to_mpz(p.mul_small(a, c)), r);
        }
    }
}

TEST(Modring, OperandFromOtherModulusIsRejected)
{
    auto const p = PrimeModulus::from_word(7);
    auto const q = PrimeModulus::from_word(1009);
    Residue const big = q.from_u64(500);
    EXPECT_THROW(residue_arith(p, big, p.one(), ArithOp::Add), ModulusMismatch);
    FieldElement const a(p, 3), b(q, 3);
    EXPECT_THROW(a + b, ModulusMismatch);
    EXPECT_EQ((FieldElement(p, 3) * FieldElement(p, 5)).value(), p.one());
}

TEST(Modring, SerializationRoundTrip)
{
    auto const p = PrimeModulus::random_prime(200, 9);
    EXPECT_EQ(p.byte_width(), 25u);
    Rng rng(5);
    std::vector<std::uint8_t> buf(p.byte_width());
    for (int i = 0; i < 200; ++i) {
        Residue const a = p.random(rng);
        p.to_bytes(a, buf);
        EXPECT_EQ(p.from_bytes(buf), a);
    }
    auto const be = p.to_bytes_be();
    EXPECT_EQ(PrimeModulus::from_bytes_be(be), p);
    std::vector<std::uint8_t> ones(p.byte_width(), 0xff);
    EXPECT_THROW(p.from_bytes(ones), InvalidArgument);
}

TEST(Modring, WideAccumulatorMatchesDot)
{
    auto const p = PrimeModulus::random_prime(300, 10);
    Rng rng(11);
    std::vector<Residue> a(150), b(150);
    for (std::size_t i = 0; i < a.size(); ++i) {
        a[i] = p.random(rng);
        b[i] = p.random(rng);
    }
    Residue naive = p.zero();
    for (std::size_t i = 0; i < a.size(); ++i)
        naive = p.add(naive, p.mul(a[i], b[i]));
    EXPECT_EQ(dot(p, a, b), naive);
}

TEST(Modring, RandomPrimeIsDeterministic)
{
    auto const a = PrimeModulus::random_prime(128, 42);
    auto const b = PrimeModulus::random_prime(128, 42);
    EXPECT_EQ(a, b);
    EXPECT_EQ(a.bit_length(), 128u);
    EXPECT_NE(a, PrimeModulus::random_prime(128, 43));
}

TEST(Modring, Classification)
{
    auto const p = PrimeModulus::random_prime(100, 1);
    EXPECT_EQ(classify(p, p.one()).cls, CoeffClass::PlusOne);
    EXPECT_EQ(classify(p, p.neg(p.one())).cls, CoeffClass::MinusOne);
    auto const c = classify(p, p.from_i64(-17));
    EXPECT_EQ(c.cls, CoeffClass::Small);
    EXPECT_EQ(c.small, -17);
    Rng rng(3);
    for (int i = 0; i < 100; ++i) {
        Residue const v = p.random_nonzero(rng);
        EXPECT_EQ(classify(p, v).value(p), v);
    }
}
