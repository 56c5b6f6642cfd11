#include <gtest/gtest.h>

#include <filesystem>

#include "oracles.hpp"
#include "sldlag/binio.hpp"
#include "sldlag/errors.hpp"
#include "sldlag/spmatrix.hpp"

using namespace sldlag;

namespace {

/* Random matrix with every coefficient class and optional dense columns. */
SparseMatrix random_matrix(PrimeModulus const & p, std::uint64_t nrows, std::uint64_t ncols,
                           std::uint64_t per_row, std::uint64_t dense, std::uint64_t seed)
{
    Rng rng(seed);
    SparseMatrix a(p, nrows, ncols, dense);
    std::uint64_t const sparse = ncols - dense;
    for (std::uint64_t i = 0; i < nrows; ++i) {
        std::vector<std::uint32_t> cols;
        std::uint64_t const w = std::min(per_row, sparse);
        while (cols.size() < w) {
            auto c = std::uint32_t(rng.below(sparse));
            if (std::find(cols.begin(), cols.end(), c) == cols.end())
                cols.push_back(c);
        }
        std::sort(cols.begin(), cols.end());
        std::vector<Entry> row;
        for (auto c : cols) {
            switch (rng.below(4)) {
            case 0:
                row.push_back({c, Coefficient::plus_one()});
                break;
            case 1:
                row.push_back({c, Coefficient::minus_one()});
                break;
            case 2: {
                auto v = std::int32_t(rng.below(1000000) + 2);
                row.push_back({c, Coefficient::small_value(rng.below(2) ? v : -v)});
                break;
            }
            default:
                row.push_back({c, Coefficient::full_value(p.random_nonzero(rng))});
            }
        }
        a.append_row(row);
    }
    for (std::uint64_t d = 0; d < dense; ++d)
        a.set_dense(d, random_vector(p, nrows, rng));
    return a;
}

std::string temp_path(std::string const & name)
{
    return (std::filesystem::temp_directory_path() / ("sldlag_test_" + name)).string();
}

} // namespace

TEST(SpMatrix, IdentityAndZero)
{
    auto const p = PrimeModulus::random_prime(200, 1);
    auto const id = identity_matrix(p, 30);
    Rng rng(2);
    Vector const u = random_vector(p, 30, rng);
    EXPECT_EQ(spmv_sequential(id, u), u);
    auto const a = random_matrix(p, 40, 30, 8, 2, 3);
    EXPECT_TRUE(is_zero_vector(p, spmv_sequential(a, Vector(30))));
    EXPECT_THROW(spmv_sequential(a, Vector(29)), DimensionMismatch);
}

TEST(SpMatrix, MatchesDenseOracle)
{
    for (auto const & p : {PrimeModulus::from_word(1009), PrimeModulus::random_prime(64, 5),
                           PrimeModulus::random_prime(200, 6), PrimeModulus::random_prime(521, 7)}) {
        for (std::uint64_t dense : {0u, 3u}) {
            auto const a = random_matrix(p, 50, 50, 10, dense, 11 + dense);
            Rng rng(9);
            Vector const u = random_vector(p, 50, rng);
            auto const expect = oracle::from_mpz_vec(
                p, oracle::matvec(oracle::to_dense(a), oracle::to_mpz_vec(u)));
            EXPECT_EQ(spmv_sequential(a, u), expect);
        }
    }
}

TEST(SpMatrix, KernelAgreesWithRowwiseDotAccumulate)
{
    auto const p = PrimeModulus::random_prime(200, 8);
    auto const a = random_matrix(p, 60, 80, 20, 0, 4);
    SpmvKernel kernel(a);
    RnsContext ctx = kernel.context();
    ctx.set_checked(true);
    Rng rng(5);
    Vector const u = random_vector(p, 80, rng);
    Vector const v = kernel.apply(u);
    for (std::uint64_t i = 0; i < a.nrows(); ++i) {
        std::vector<Coefficient> coeffs;
        std::vector<RnsValue> in;
        for (auto k = a.row_begin(i); k < a.row_end(i); ++k) {
            coeffs.push_back(a.coefficient(k));
            in.push_back(ctx.to_rns(u[a.col(k)]));
        }
        EXPECT_EQ(ctx.from_rns(rns_dot_accumulate(coeffs, in, ctx)), v[i]);
    }
}

TEST(SpMatrix, Linearity)
{
    auto const p = PrimeModulus::random_prime(128, 9);
    auto const a = random_matrix(p, 70, 70, 12, 2, 10);
    SpmvKernel kernel(a);
    Rng rng(11);
    for (int t = 0; t < 100; ++t) {
        Vector const u = random_vector(p, 70, rng), w = random_vector(p, 70, rng);
        Residue const al = p.random(rng), be = p.random(rng);
        Vector comb(70);
        for (std::size_t j = 0; j < 70; ++j)
            comb[j] = p.add(p.mul(al, u[j]), p.mul(be, w[j]));
        Vector const lhs = kernel.apply(comb);
        Vector const au = kernel.apply(u), aw = kernel.apply(w);
        for (std::size_t i = 0; i < 70; ++i)
            ASSERT_EQ(lhs[i], p.add(p.mul(al, au[i]), p.mul(be, aw[i])));
    }
}

TEST(SpMatrix, ClassEncodingIsValueTransparent)
{
    auto const p = PrimeModulus::random_prime(160, 12);
    auto const a = random_matrix(p, 50, 50, 10, 1, 13);
    auto const f = a.with_full_classes();
    for (auto t : f.tags())
        EXPECT_EQ(t, 3);
    Rng rng(14);
    Vector const u = random_vector(p, 50, rng);
    EXPECT_EQ(spmv_sequential(a, u), spmv_sequential(f, u));
    EXPECT_EQ(spmv_sequential(a, u), spmv_sequential(a.materialized(), u));
}

TEST(SpMatrix, SmallestClassOnInsert)
{
    auto const p = PrimeModulus::random_prime(100, 3);
    SparseMatrix a(p, 1, 4);
    std::vector<Entry> row{{0, Coefficient::full_value(p.one())},
                           {1, Coefficient::full_value(p.neg(p.one()))},
                           {2, Coefficient::full_value(p.from_i64(-5))},
                           {3, Coefficient::small_value(1)}};
    a.append_row(row);
    EXPECT_EQ(a.cls(0), CoeffClass::PlusOne);
    EXPECT_EQ(a.cls(1), CoeffClass::MinusOne);
    EXPECT_EQ(a.cls(2), CoeffClass::Small);
    EXPECT_EQ(a.payload(2), -5);
    EXPECT_EQ(a.cls(3), CoeffClass::PlusOne);
    SparseMatrix b(p, 1, 4);
    std::vector<Entry> bad{{2, Coefficient::plus_one()}, {1, Coefficient::plus_one()}};
    EXPECT_THROW(b.append_row(bad), InvalidArgument);
    std::vector<Entry> zero{{0, Coefficient::full_value(p.zero())}};
    EXPECT_THROW(b.append_row(zero), InvalidArgument);
}

TEST(SpMatrix, Stats)
{
    auto const p = PrimeModulus::from_word(1009);
    auto const e = matrix_stats(SparseMatrix(p, 0, 0));
    EXPECT_EQ(e.nnz, 0u);
    EXPECT_EQ(e.avg_row_weight, 0.0);
    auto const s = matrix_stats(identity_matrix(p, 10));
    EXPECT_EQ(s.avg_row_weight, 1.0);
    EXPECT_EQ(s.row_weight_stddev, 0.0);
    EXPECT_EQ(s.pm1_fraction, 1.0);
    ASSERT_EQ(s.column_weight_histogram.size(), 2u);
    EXPECT_EQ(s.column_weight_histogram[1], 10u);
}

TEST(SpMatrix, FileRoundTrips)
{
    auto const p = PrimeModulus::random_prime(200, 15);
    SparseMatrix const empty(p, 0, 0);
    EXPECT_EQ(decode_matrix(encode_matrix(empty)), empty);

    SparseMatrix m1(p, 1, 1);
    std::vector<Entry> r{{0, Coefficient::minus_one()}};
    m1.append_row(r);
    auto const m1b = decode_matrix(encode_matrix(m1));
    EXPECT_EQ(m1b, m1);
    EXPECT_EQ(m1b.cls(0), CoeffClass::MinusOne);

    auto const big = random_matrix(p, 1000, 1000, 10, 2, 16);
    auto const path = temp_path("roundtrip.sldm");
    store_matrix(big, path);
    auto const loaded = load_matrix(path);
    EXPECT_EQ(loaded, big);
    EXPECT_EQ(encode_matrix(loaded), read_file(path));
    std::filesystem::remove(path);

    Rng rng(3);
    Vector const v = random_vector(p, 77, rng);
    PrimeModulus q;
    EXPECT_EQ(decode_vector(encode_vector(p, v), q), v);
    EXPECT_EQ(q, p);
}

TEST(SpMatrix, FormatErrorsAreDistinct)
{
    auto const p = PrimeModulus::from_word(1009);
    auto const a = random_matrix(p, 5, 5, 2, 0, 1);
    auto bytes = encode_matrix(a);
    auto kind_of = [](std::vector<std::uint8_t> const & b) {
        try {
            decode_matrix(b);
        } catch (FormatError const & e) {
            return int(e.kind());
        }
        return -1;
    };
    auto bad = bytes;
    bad[0] = 'X';
    EXPECT_EQ(kind_of(bad), int(FormatError::Kind::BadMagic));
    bad = bytes;
    bad[4] = 2;
    EXPECT_EQ(kind_of(bad), int(FormatError::Kind::BadVersion));
    bad = bytes;
    bad.resize(bytes.size() - 1);
    EXPECT_EQ(kind_of(bad), int(FormatError::Kind::Truncated));
    bad = bytes;
    bad.push_back(0);
    EXPECT_EQ(kind_of(bad), int(FormatError::Kind::InvariantViolation));

    /* one row with an out-of-range column */
    SparseMatrix one(p, 1, 3);
    std::vector<Entry> r{{2, Coefficient::plus_one()}};
    one.append_row(r);
    auto ob = encode_matrix(one);
    /* header: 4 + 4 + 8 + 8 + 2 + 2 (ell) + 4 (dense) + 4 (count) */
    std::size_t const delta_at = 4 + 4 + 8 + 8 + 2 + 2 + 4 + 4;
    ob[delta_at] = 7;
    EXPECT_EQ(kind_of(ob), int(FormatError::Kind::InvariantViolation));
    EXPECT_THROW(load_matrix("/nonexistent/dir/m.sldm"), FormatError);
}
