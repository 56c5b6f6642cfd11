#include <gtest/gtest.h>

#include "oracles.hpp"
#include "sldlag/corpus.hpp"
#include "sldlag/errors.hpp"
#include "sldlag/sge.hpp"

using namespace sldlag;

namespace {

Corpus small_corpus(std::uint64_t n, double gamma, std::uint64_t seed, PrimeModulus const & p,
                    std::uint64_t dense = 0)
{
    CorpusProfile prof;
    prof.n = n;
    prof.gamma = gamma;
    prof.seed = seed;
    prof.dense_cols = dense;
    prof.planted_kernel_cols = 2;
    return generate_corpus(prof, p);
}

} // namespace

TEST(Sge, ProjectedCost)
{
    auto const p = PrimeModulus::from_word(1009);
    EXPECT_EQ(projected_cost(SparseMatrix(p, 0, 0)), 0u);
    EXPECT_EQ(projected_cost(identity_matrix(p, 10)), 100u);
    unsigned __int128 const ffs = (unsigned __int128)3602667u * 360266700u;
    EXPECT_EQ(std::uint64_t(ffs), 3602667ULL * 360266700ULL); // fits in 64 bits
}

TEST(Sge, IdentityReducesToNothing)
{
    auto const p = PrimeModulus::from_word(1009);
    auto const r = sge_reduce(identity_matrix(p, 5));
    EXPECT_EQ(r.reduced.nrows(), 0u);
    EXPECT_EQ(r.reduced.ncols(), 0u);
    Vector const w = lift_kernel(r.transcript, {});
    EXPECT_EQ(w.size(), 5u);
    EXPECT_TRUE(is_zero_vector(p, w));
    EXPECT_TRUE(lift_free_column(r.transcript).empty());
}

TEST(Sge, ZeroColumnIsDroppedAndPinned)
{
    auto const p = PrimeModulus::from_word(1009);
    /* 3x3 with the middle column empty and a dense-ish rest */
    SparseMatrix a(p, 3, 3);
    for (int i = 0; i < 3; ++i) {
        std::vector<Entry> row{{0, Coefficient::small_value(i + 2)}, {2, Coefficient::small_value(3 * i + 5)}};
        a.append_row(row);
    }
    auto const r = sge_reduce(a);
    ASSERT_FALSE(r.transcript.steps.empty());
    EXPECT_EQ(r.transcript.steps[0].kind, SgeStepKind::DropZeroColumn);
    EXPECT_EQ(r.transcript.steps[0].col, 1u);
    EXPECT_EQ(r.transcript.fixed_zero_cols, std::vector<std::uint64_t>{1});
    Vector wr(r.reduced.ncols(), p.one());
    Vector const w = lift_kernel(r.transcript, wr);
    EXPECT_TRUE(p.is_zero(w[1]));
    Vector const f = lift_free_column(r.transcript);
    EXPECT_TRUE(p.is_one(f[1]));
    EXPECT_TRUE(is_zero_vector(p, spmv_sequential(a, f)));
}

TEST(Sge, EmptyTranscriptLiftIsIdentity)
{
    auto const p = PrimeModulus::from_word(1009);
    SgeTranscript t;
    t.modulus = p;
    t.original_ncols = 3;
    t.original_nrows = 3;
    t.column_map = {0, 1, 2};
    Vector const v{p.from_u64(4), p.from_u64(5), p.from_u64(6)};
    EXPECT_EQ(lift_kernel(t, v), v);
    EXPECT_THROW(lift_kernel(t, Vector(2)), DimensionMismatch);
}

TEST(Sge, SoundnessReplayAndMonotonicity)
{
    auto const p = PrimeModulus::random_prime(62, 17);
    int density_ok = 0;
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        auto const c = small_corpus(500, 12, seed, p, seed % 4 == 0 ? 2 : 0);
        auto const r = sge_reduce(c.matrix);
        for (std::size_t i = 1; i < r.cost_trace.size(); ++i)
            ASSERT_LE(r.cost_trace[i], r.cost_trace[i - 1]);
        EXPECT_TRUE(sge_replay(c.matrix, r.transcript) == r.reduced);
        auto const basis = oracle::kernel_basis64(oracle::to_dense64(r.reduced));
        for (auto const & b : basis) {
            Vector const w = lift_kernel(r.transcript, oracle::words_to_vector(p, b));
            ASSERT_FALSE(is_zero_vector(p, w));
            ASSERT_TRUE(is_zero_vector(p, spmv_sequential(c.matrix, w))) << "seed " << seed;
        }
        for (std::size_t k = 0; k < r.transcript.fixed_zero_cols.size(); ++k)
            ASSERT_TRUE(is_zero_vector(p, spmv_sequential(c.matrix, lift_free_column(r.transcript, k))));
        if (r.reduced.nrows() > 0 &&
            matrix_stats(r.reduced).avg_row_weight >= matrix_stats(c.matrix).avg_row_weight)
            ++density_ok;
    }
    EXPECT_GE(density_ok, 18);
}

TEST(Sge, FillLimitAndMemoryBudgetStop)
{
    auto const p = PrimeModulus::random_prime(64, 3);
    auto const c = small_corpus(600, 12, 4, p);
    SgeOptions tight;
    tight.max_fill_row_weight = 1;
    auto const r = sge_reduce(c.matrix, tight);
    for (std::uint64_t i = 0; i < r.reduced.nrows(); ++i)
        (void)i;
    EXPECT_TRUE(r.stop_reason == "row fill limit reached" || r.stop_reason == "no rule applies");
    for (auto const & s : r.transcript.steps)
        EXPECT_NE(s.kind, SgeStepKind::CombineRows);

    SgeOptions budget;
    budget.memory_budget_bytes = c.matrix.nnz() * kSgeBytesPerEntry;
    auto const b = sge_reduce(c.matrix, budget);
    EXPECT_EQ(b.stop_reason, "memory budget reached");
    EXPECT_TRUE(b.transcript.steps.empty());
}

TEST(Sge, TranscriptRoundTrip)
{
    auto const p = PrimeModulus::random_prime(200, 5);
    auto const c = small_corpus(500, 12, 8, p);
    auto const r = sge_reduce(c.matrix);
    auto const bytes = encode_transcript(r.transcript);
    auto const back = decode_transcript(bytes);
    EXPECT_EQ(back, r.transcript);
    EXPECT_EQ(encode_transcript(back), bytes);
    auto bad = bytes;
    bad[0] = 'Q';
    EXPECT_THROW(decode_transcript(bad), FormatError);
    bad = bytes;
    bad.pop_back();
    EXPECT_THROW(decode_transcript(bad), FormatError);
}
