#include <gtest/gtest.h>

#include <algorithm>

#include "sldlag/balance.hpp"
#include "sldlag/corpus.hpp"
#include "sldlag/errors.hpp"

using namespace sldlag;

namespace {

SparseMatrix from_pattern(PrimeModulus const & p, std::vector<std::vector<std::uint32_t>> const & rows,
                          std::uint64_t ncols)
{
    SparseMatrix a(p, rows.size(), ncols);
    for (auto const & r : rows) {
        std::vector<Entry> e;
        for (auto c : r)
            e.push_back({c, Coefficient::small_value(std::int32_t(c + 2))});
        a.append_row(e);
    }
    return a;
}

SparseMatrix random_square(PrimeModulus const & p, std::uint64_t n, std::uint64_t seed)
{
    CorpusProfile prof;
    prof.n = n;
    prof.gamma = 5;
    prof.seed = seed;
    return generate(prof, p);
}

} // namespace

TEST(Balance, GridSpecParsing)
{
    EXPECT_EQ(GridSpec::parse("2x4"), (GridSpec{2, 4}));
    EXPECT_EQ(GridSpec::parse("3X1").r, 3u);
    EXPECT_THROW(GridSpec::parse("0x2"), InvalidArgument);
    EXPECT_THROW(GridSpec::parse("2by2"), InvalidArgument);
    EXPECT_EQ((GridSpec{2, 3}).fragments(), 6u);
    EXPECT_EQ(padded_size(9, GridSpec{2, 2}), 10u);
    EXPECT_EQ(padded_size(10, GridSpec{2, 2}), 10u);
    EXPECT_EQ(padded_size(7, GridSpec{2, 3}), 12u);
}

TEST(Balance, SerpentineDealOfFourColumns)
{
    auto const p = PrimeModulus::from_word(1009);
    /* column weights 4, 3, 2, 1 */
    auto const a = from_pattern(p, {{0, 1, 2, 3}, {0, 1, 2}, {0, 1}, {0}}, 4);
    GridSpec const g{1, 2};
    auto const pp = balance_permutation(a, g);
    EXPECT_EQ(pp.col_perm, (std::vector<std::uint64_t>{0, 2, 3, 1}));
    auto const bs = split(a, pp, g);
    EXPECT_EQ(bs.block(0, 0).nnz(), 5u);
    EXPECT_EQ(bs.block(0, 1).nnz(), 5u);
    EXPECT_DOUBLE_EQ(imbalance(bs), 1.0);
}

TEST(Balance, ImbalanceExtremes)
{
    auto const p = PrimeModulus::from_word(1009);
    /* everything in the top-left quarter of a 4x4 on a 2x2 grid */
    auto const a = from_pattern(p, {{0, 1}, {0, 1}, {}, {}}, 4);
    GridSpec const g{2, 2};
    auto const bs = split(a, identity_permutation(a, g), g);
    EXPECT_DOUBLE_EQ(imbalance(bs), 4.0);
    EXPECT_DOUBLE_EQ(imbalance(a, identity_permutation(a, g), g), 4.0);
    auto const full = from_pattern(p, {{0, 1, 2, 3}, {0, 1, 2, 3}, {0, 1, 2, 3}, {0, 1, 2, 3}}, 4);
    EXPECT_DOUBLE_EQ(imbalance(split(full, identity_permutation(full, g), g)), 1.0);
    auto const z = from_pattern(p, {{}, {}}, 2);
    EXPECT_THROW(imbalance(split(z, identity_permutation(z, g), g)), InvalidArgument);
}

TEST(Balance, OneByOneIsTheMatrixItself)
{
    auto const p = PrimeModulus::random_prime(64, 1);
    auto const a = random_square(p, 100, 3);
    GridSpec const g{1, 1};
    auto const bs = split(a, identity_permutation(a, g), g);
    ASSERT_EQ(bs.blocks.size(), 1u);
    EXPECT_TRUE(bs.blocks[0] == a);
    EXPECT_EQ(bs.pad_rows, 0u);
}

TEST(Balance, PaddingReassemblyAndPins)
{
    auto const p = PrimeModulus::from_word(1009);
    SparseMatrix a(p, 9, 9);
    Rng rng(4);
    for (int i = 0; i < 9; ++i) {
        std::vector<Entry> row;
        for (std::uint32_t j = 0; j < 9; ++j)
            if (rng.below(3) == 0)
                row.push_back({j, Coefficient::small_value(std::int32_t(rng.below(1000) + 2))});
        a.append_row(row);
    }
    GridSpec const g{2, 2};
    auto const pp = balance_permutation(a, g);
    EXPECT_EQ(pp.n_padded, 10u);
    EXPECT_TRUE(is_permutation(pp.row_perm));
    EXPECT_TRUE(is_permutation(pp.col_perm));
    EXPECT_EQ(pp.row_perm[9], 9u);
    EXPECT_EQ(pp.col_perm[9], 9u);
    auto const bs = split(a, pp, g);
    EXPECT_EQ(bs.blocks.size(), 4u);
    EXPECT_EQ(bs.block_rows, 5u);
    EXPECT_TRUE(assemble(bs) == permute_pad(a, pp));
    ASSERT_EQ(bs.pin_rows.size(), 1u);
    auto const b = permute_pad(a, pp);
    auto [pr, pc] = bs.pin_rows[0];
    EXPECT_TRUE(p.is_one(b.at(pr, pc)));
    EXPECT_EQ(b.row_weight(pr), 1u);
    EXPECT_EQ(b.column_weights()[pc], 1u);
}

TEST(Balance, PermutationSoundnessAndWeightMultisets)
{
    auto const p = PrimeModulus::random_prime(128, 2);
    for (GridSpec g : {GridSpec{2, 2}, GridSpec{2, 1}, GridSpec{3, 2}, GridSpec{4, 4}}) {
        auto const a = random_square(p, 301, g.r * 10 + g.c);
        auto const pp = balance_permutation(a, g);
        auto const b = permute_pad(a, pp);
        Rng rng(5);
        Vector const u = random_vector(p, a.ncols(), rng);
        Vector pu(pp.n_padded, p.zero());
        for (std::uint64_t j = 0; j < a.ncols(); ++j)
            pu[pp.col_perm[j]] = u[j];
        Vector const bu = spmv_sequential(b, pu);
        Vector const au = spmv_sequential(a, u);
        for (std::uint64_t i = 0; i < a.nrows(); ++i)
            ASSERT_EQ(bu[pp.row_perm[i]], au[i]);
        auto rw = a.row_weights(), cw = a.column_weights();
        rw.resize(pp.n_padded, 1);
        cw.resize(pp.n_padded, 1);
        auto brw = b.row_weights(), bcw = b.column_weights();
        std::sort(rw.begin(), rw.end());
        std::sort(cw.begin(), cw.end());
        std::sort(brw.begin(), brw.end());
        std::sort(bcw.begin(), bcw.end());
        EXPECT_EQ(rw, brw);
        EXPECT_EQ(cw, bcw);
    }
}

TEST(Balance, BalancedNeverWorseThanIdentity)
{
    auto const p = PrimeModulus::random_prime(64, 7);
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        auto prof = profile_ffs(5000);
        prof.gamma = 30;
        prof.seed = seed;
        auto const a = generate(prof, p);
        GridSpec const g{4, 4};
        double const bal = imbalance(a, balance_permutation(a, g), g);
        double const id = imbalance(a, identity_permutation(a, g), g);
        EXPECT_LE(bal, id);
        EXPECT_LE(bal, 1.10);
    }
}

TEST(Balance, PermutationFileRoundTrip)
{
    auto const p = PrimeModulus::random_prime(64, 8);
    auto const a = random_square(p, 97, 1);
    auto const pp = balance_permutation(a, GridSpec{2, 3});
    EXPECT_EQ(decode_permutation(encode_permutation(pp)), pp);
    auto bad = encode_permutation(pp);
    bad[bad.size() - 1] = 0xff;
    EXPECT_THROW(decode_permutation(bad), FormatError);
}
