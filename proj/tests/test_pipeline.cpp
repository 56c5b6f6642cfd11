#include <gtest/gtest.h>

#include <algorithm>
#include <filesystem>
#include <unistd.h>

#include "oracles.hpp"
#include "sldlag/corpus.hpp"
#include "sldlag/errors.hpp"
#include "sldlag/pipeline.hpp"

using namespace sldlag;
namespace fs = std::filesystem;

namespace {

SparseMatrix small_corpus(PrimeModulus const & p, std::uint64_t n, std::uint64_t seed)
{
    CorpusProfile prof;
    prof.n = n;
    prof.gamma = 8;
    prof.seed = seed;
    return generate(prof, p);
}

/* a kernel vector of the original matrix, checked with big integers */
void expect_kernel(SparseMatrix const & a, Vector const & w)
{
    ASSERT_EQ(w.size(), a.ncols());
    EXPECT_FALSE(is_zero_vector(a.modulus(), w));
    auto const prod = oracle::matvec(oracle::to_dense(a), oracle::to_mpz_vec(w));
    for (auto const & x : prod)
        EXPECT_EQ(x, 0);
}

} // namespace

TEST(Pipeline, CorpusAcrossGrids)
{
    auto const p = PrimeModulus::random_prime(64, 11);
    auto const a = small_corpus(p, 240, 2);
    for (char const * g : {"1x1", "2x2", "2x1", "1x3"}) {
        PipelineOptions o;
        o.grid = GridSpec::parse(g);
        o.solve.bp = {2, 4};
        o.solve.seed = 9;
        auto const r = run_pipeline(a, o);
        EXPECT_TRUE(r.verified) << g;
        EXPECT_EQ(r.route, "solver") << g;
        expect_kernel(a, r.w);
        EXPECT_EQ(r.solved_dimension % o.grid.fragments(), 0u);
        EXPECT_GT(r.total_seconds(), 0.0);
    }
}

TEST(Pipeline, NfsShapeWithDenseColumns)
{
    auto const p = PrimeModulus::random_prime(120, 4);
    CorpusProfile prof = profile_nfs(300);
    prof.gamma = 10;
    prof.seed = 5;
    auto const a = generate(prof, p);
    ASSERT_GT(a.dense_count(), 0u);
    PipelineOptions o;
    o.grid = GridSpec{2, 2};
    o.solve.bp = {1, 2};
    auto const r = run_pipeline(a, o);
    EXPECT_EQ(r.route, "solver");
    expect_kernel(a, r.w);
}

TEST(Pipeline, WithoutEliminationOrBalancing)
{
    auto const p = PrimeModulus::from_word(1000003);
    auto const a = small_corpus(p, 150, 8);
    PipelineOptions o;
    o.run_sge = false;
    o.balance = false;
    o.grid = GridSpec{2, 1};
    o.solve.algorithm = Algorithm::Wiedemann;
    auto const r = run_pipeline(a, o);
    EXPECT_EQ(r.sge_steps, 0u);
    EXPECT_EQ(r.reduced_cols, 150u);
    EXPECT_EQ(r.blocking, (BlockingParams{1, 1}));
    expect_kernel(a, r.w);
}

TEST(Pipeline, InvertibleInputIsTrivialKernel)
{
    auto const p = PrimeModulus::random_prime(64, 2);
    auto const a = identity_matrix(p, 50);
    PipelineOptions o;
    try {
        run_pipeline(a, o);
        FAIL() << "identity matrix has no kernel";
    } catch (SolverFailure const & e) {
        EXPECT_FALSE(e.retry());
        EXPECT_NE(std::string(e.what()).find("trivial kernel"), std::string::npos);
    }
}

TEST(Pipeline, InvertibleInputWithoutEliminationFails)
{
    auto const p = PrimeModulus::from_word(1009);
    Rng rng(3);
    /* upper triangular with non-zero diagonal */
    SparseMatrix a(p, 30, 30);
    for (std::uint32_t i = 0; i < 30; ++i) {
        std::vector<std::uint32_t> cols{i};
        Vector vals{p.random_nonzero(rng)};
        if (i + 1 < 30) {
            cols.push_back(i + 1);
            vals.push_back(p.random_nonzero(rng));
        }
        a.append_row_values(cols, vals);
    }
    PipelineOptions o;
    o.run_sge = false;
    o.solve.max_retries = 1;
    EXPECT_THROW(run_pipeline(a, o), SolverFailure);
}

TEST(Pipeline, EmptyColumnGivesFreeColumnRoute)
{
    auto const p = PrimeModulus::random_prime(64, 3);
    /* identity with column 7 removed: the only kernel direction is e_7 */
    SparseMatrix a(p, 20, 20);
    for (std::uint32_t i = 0; i < 20; ++i) {
        std::vector<std::uint32_t> cols;
        Vector vals;
        if (i != 7) {
            cols.push_back(i);
            vals.push_back(p.from_u64(i + 2));
        }
        a.append_row_values(cols, vals);
    }
    PipelineOptions o;
    auto const r = run_pipeline(a, o);
    EXPECT_EQ(r.route, "free-column");
    expect_kernel(a, r.w);
    EXPECT_TRUE(p.is_one(r.w[7]));

    o.allow_free_column = false;
    EXPECT_THROW(run_pipeline(a, o), SolverFailure);
}

TEST(Pipeline, FoldKeepsKernelOfTallMatrix)
{
    auto const p = PrimeModulus::from_word(1000003);
    Rng rng(17);
    for (int trial = 0; trial < 10; ++trial) {
        std::uint64_t const cols = 12 + trial, rows = cols + 1 + trial * 3;
        /* rows orthogonal to a fixed vector z */
        Vector z(cols);
        for (auto & x : z)
            x = p.random_nonzero(rng);
        SparseMatrix r(p, rows, cols);
        for (std::uint64_t i = 0; i < rows; ++i) {
            std::vector<std::uint32_t> cs;
            Vector vs;
            Residue acc{};
            for (std::uint32_t j = 0; j + 1 < cols; ++j) {
                if (rng.uniform() < 0.4) {
                    Residue const v = p.random_nonzero(rng);
                    cs.push_back(j);
                    vs.push_back(v);
                    acc = p.add(acc, p.mul(v, z[j]));
                }
            }
            if (!p.is_zero(acc)) {
                cs.push_back(std::uint32_t(cols - 1));
                vs.push_back(p.neg(p.mul(acc, p.inverse(z[cols - 1]))));
            }
            r.append_row_values(cs, vs);
        }
        ASSERT_TRUE(is_zero_vector(p, spmv_sequential(r, z)));
        auto const s = fold_square(r, 100 + trial);
        EXPECT_EQ(s.nrows(), cols);
        EXPECT_EQ(s.ncols(), cols);
        s.validate();
        EXPECT_TRUE(is_zero_vector(p, spmv_sequential(s, z)));
    }
}

TEST(Pipeline, FoldPadsWideMatrix)
{
    auto const p = PrimeModulus::from_word(1009);
    SparseMatrix r(p, 2, 5);
    std::vector<std::uint32_t> c0{0, 3}, c1{1, 4};
    Vector v0{p.from_u64(1), p.from_u64(2)}, v1{p.from_u64(3), p.from_u64(4)};
    r.append_row_values(c0, v0);
    r.append_row_values(c1, v1);
    auto const s = fold_square(r, 1);
    ASSERT_EQ(s.nrows(), 5u);
    EXPECT_EQ(s.at(0, 3), p.from_u64(2));
    EXPECT_EQ(s.at(1, 4), p.from_u64(4));
    for (std::uint64_t i = 2; i < 5; ++i)
        EXPECT_EQ(s.row_weight(i), 0u);
}

TEST(Pipeline, DeterministicAndResumable)
{
    auto const p = PrimeModulus::random_prime(80, 8);
    auto const a = small_corpus(p, 200, 6);
    PipelineOptions o;
    o.grid = GridSpec{2, 2};
    o.solve.bp = {2, 4};
    o.solve.seed = 31;
    auto const first = run_pipeline(a, o);
    auto const second = run_pipeline(a, o);
    EXPECT_EQ(first.w, second.w);

    auto const dir = fs::temp_directory_path() / ("sldlag_pipeline_ck_" + std::to_string(::getpid()));
    fs::remove_all(dir);
    CheckpointConfig ck;
    ck.dir = dir.string();
    ck.interval = 25;
    ck.interrupt_after = 4;
    o.solve.checkpoint = ck;
    EXPECT_THROW(run_pipeline(a, o), Interrupted);
    o.solve.checkpoint->interrupt_after = -1;
    auto const resumed = run_pipeline(a, o);
    EXPECT_EQ(resumed.w, first.w);
    std::uint64_t krylov = 0;
    for (auto s : resumed.solve.krylov_spmvs)
        krylov += s;
    EXPECT_LT(krylov, 2 * resumed.solve.sequence_length);
    fs::remove_all(dir);
}

TEST(Pipeline, LogReportsStages)
{
    auto const p = PrimeModulus::random_prime(64, 5);
    auto const a = small_corpus(p, 120, 1);
    std::vector<std::string> stages;
    PipelineOptions o;
    run_pipeline(a, o, [&](std::string const & s, std::string const &) { stages.push_back(s); });
    ASSERT_GE(stages.size(), 3u);
    EXPECT_EQ(stages.front(), "sge");
    EXPECT_NE(std::find(stages.begin(), stages.end(), "solve"), stages.end());
}
