#include <gtest/gtest.h>

#include <filesystem>

#include "oracles.hpp"
#include "sldlag/binio.hpp"
#include "sldlag/corpus.hpp"
#include "sldlag/errors.hpp"
#include "sldlag/solver.hpp"

using namespace sldlag;
namespace fs = std::filesystem;

namespace {

PrimeModulus const & p1009()
{
    static PrimeModulus const p = PrimeModulus::from_word(1009);
    return p;
}

SparseMatrix random_dense_like(PrimeModulus const & p, std::uint64_t n, Rng & rng, double density = 0.3)
{
    SparseMatrix a(p, n, n);
    for (std::uint64_t i = 0; i < n; ++i) {
        std::vector<std::uint32_t> cols;
        std::vector<Residue> vals;
        for (std::uint32_t j = 0; j < n; ++j) {
            if (rng.uniform() >= density)
                continue;
            Residue const v = p.random_nonzero(rng);
            cols.push_back(j);
            vals.push_back(v);
        }
        a.append_row_values(cols, vals);
    }
    return a;
}

SparseMatrix corpus_matrix(PrimeModulus const & p, std::uint64_t n, std::uint64_t seed, double gamma = 0)
{
    CorpusProfile prof;
    prof.n = n;
    prof.gamma = gamma > 0 ? gamma : (n >= 100 ? 8 : 4);
    prof.seed = seed;
    return generate(prof, p);
}

/* a_i = x^T A^i y through dense big-integer powers */
std::vector<mpz_class> dense_sequence(SparseMatrix const & a, Vector const & x, Vector const & y, std::size_t count)
{
    auto const d = oracle::to_dense(a);
    auto const xs = oracle::to_mpz_vec(x);
    auto v = oracle::to_mpz_vec(y);
    std::vector<mpz_class> out;
    for (std::size_t i = 0; i < count; ++i) {
        mpz_class s = 0;
        for (std::size_t t = 0; t < v.size(); ++t)
            s += xs[t] * v[t];
        out.push_back(oracle::md(s, d.ell));
        v = oracle::matvec(d, v);
    }
    return out;
}

/* Sequence with the given monic characteristic polynomial whose minimal
 * polynomial is exactly that one (checked by Hankel rank). */
std::vector<Residue> planted_recurrence(PrimeModulus const & p, Polynomial const & f, std::size_t len, Rng & rng);

std::size_t hankel_rank(PrimeModulus const & p, std::span<Residue const> seq, std::size_t k)
{
    oracle::Dense h;
    h.ell = sldlag::to_mpz(p.value());
    h.rows = h.cols = k;
    h.a.resize(k * k);
    for (std::size_t i = 0; i < k; ++i)
        for (std::size_t j = 0; j < k; ++j)
            h.at(i, j) = sldlag::to_mpz(seq[i + j]);
    return oracle::rank(h);
}

std::vector<Residue> planted_recurrence(PrimeModulus const & p, Polynomial const & f, std::size_t len, Rng & rng)
{
    std::size_t const d = f.size() - 1;
    for (;;) {
        std::vector<Residue> a(len);
        for (std::size_t i = 0; i < d; ++i)
            a[i] = p.random(rng);
        for (std::size_t k = d; k < len; ++k) {
            Residue s{};
            for (std::size_t i = 0; i < d; ++i)
                s = p.add(s, p.mul(f[i], a[k - d + i]));
            a[k] = p.neg(s);
        }
        if (hankel_rank(p, a, d) == d)
            return a;
    }
}

Polynomial poly(PrimeModulus const & p, std::initializer_list<std::int64_t> c)
{
    Polynomial out;
    for (auto v : c)
        out.push_back(p.from_i64(v));
    return out;
}

bool annihilates_scalar(PrimeModulus const & p, std::span<Residue const> seq, Polynomial const & f)
{
    for (std::size_t k = 0; k + f.size() - 1 < seq.size(); ++k) {
        Residue s{};
        for (std::size_t i = 0; i < f.size(); ++i)
            s = p.add(s, p.mul(f[i], seq[k + i]));
        if (!p.is_zero(s))
            return false;
    }
    return true;
}

std::string temp_dir(std::string const & name)
{
    auto const d = fs::temp_directory_path() / ("sldlag_test_" + name + "_" + std::to_string(::getpid()));
    fs::remove_all(d);
    return d.string();
}

} // namespace

TEST(Solver, BlockingParsing)
{
    EXPECT_EQ(BlockingParams::parse("2,4"), (BlockingParams{2, 4}));
    EXPECT_EQ(BlockingParams::parse("3"), (BlockingParams{3, 6}));
    EXPECT_THROW(BlockingParams::parse("4,2"), InvalidArgument);
    EXPECT_THROW(BlockingParams::parse("0,1"), InvalidArgument);
    EXPECT_THROW(BlockingParams::parse("2;4"), InvalidArgument);
    EXPECT_EQ(krylov_length(100, {4, 8}, 32), 25u + 13 + 32);
    EXPECT_EQ(parse_algorithm("block"), Algorithm::Block);
    EXPECT_THROW(parse_algorithm("lanczos"), InvalidArgument);
}

TEST(Solver, KrylovScalarTrivialMatrices)
{
    auto const & p = p1009();
    Rng rng(1);
    auto const x = random_vector(p, 10, rng), y = random_vector(p, 10, rng);
    Residue const xy = dot(p, x, y);

    SparseMatrix zero(p, 10, 10);
    for (int i = 0; i < 10; ++i)
        zero.append_row({});
    auto mz = make_sequential_matvec(zero);
    auto const s0 = krylov_scalar(*mz, x, y, 8);
    EXPECT_EQ(s0[0], xy);
    for (std::size_t i = 1; i < s0.size(); ++i)
        EXPECT_TRUE(p.is_zero(s0[i]));
    EXPECT_EQ(mz->applications(), 8u);

    auto const id = identity_matrix(p, 10);
    auto mi = make_sequential_matvec(id);
    for (auto const & a : krylov_scalar(*mi, x, y, 8))
        EXPECT_EQ(a, xy);
}

TEST(Solver, KrylovScalarMatchesDensePowers)
{
    auto const & p = p1009();
    Rng rng(2);
    auto const a = random_dense_like(p, 20, rng);
    auto const x = random_vector(p, 20, rng), y = random_vector(p, 20, rng);
    auto mv = make_sequential_matvec(a);
    auto const seq = krylov_scalar(*mv, x, y, 45);
    auto const ref = dense_sequence(a, x, y, 45);
    for (std::size_t i = 0; i < 45; ++i)
        EXPECT_EQ(sldlag::to_mpz(seq[i]), ref[i]) << i;
}

TEST(Solver, BerlekampMasseyKnownSequences)
{
    auto const & p = p1009();
    std::vector<Residue> cst(10, p.from_u64(7));
    EXPECT_EQ(berlekamp_massey(cst, p), poly(p, {-1, 1}));

    std::vector<Residue> fib{p.one(), p.one()};
    for (int i = 2; i < 20; ++i)
        fib.push_back(p.add(fib[i - 1], fib[i - 2]));
    EXPECT_EQ(berlekamp_massey(fib, p), poly(p, {-1, -1, 1}));

    bool flagged = false;
    std::vector<Residue> zeros(12, Residue{});
    EXPECT_EQ(berlekamp_massey(zeros, p, &flagged), poly(p, {1}));
    EXPECT_TRUE(flagged);
    berlekamp_massey(fib, p, &flagged);
    EXPECT_FALSE(flagged);

    /* 0, 0, 1, 0, 0, ... is annihilated by X^3 only */
    std::vector<Residue> spike(10, Residue{});
    spike[2] = p.one();
    EXPECT_EQ(berlekamp_massey(spike, p), poly(p, {0, 0, 0, 1}));
}

TEST(Solver, BerlekampMasseyRecoversPlantedRecurrence)
{
    auto const & p = p1009();
    Rng rng(3);
    for (int trial = 0; trial < 10; ++trial) {
        std::size_t const d = trial == 0 ? 25 : 1 + rng.below(50);
        Polynomial f(d + 1);
        for (auto & c : f)
            c = p.random(rng);
        f[d] = p.one();
        auto const seq = planted_recurrence(p, f, 2 * d + 4, rng);
        Polynomial const g = berlekamp_massey(seq, p);
        EXPECT_EQ(g, f) << "degree " << d;
        /* minimality: the Hankel matrices of size deg and deg + 1 have rank deg */
        EXPECT_EQ(hankel_rank(p, seq, g.size() - 1), g.size() - 1);
        EXPECT_EQ(hankel_rank(p, seq, g.size()), g.size() - 1);
        EXPECT_TRUE(annihilates_scalar(p, seq, g));
    }
}

TEST(Solver, MksolScalarOnPlantedKernel)
{
    for (auto const & p : {p1009(), PrimeModulus::random_prime(100, 5)}) {
        auto const a = corpus_matrix(p, 50, 4);
        auto mv = make_sequential_matvec(a);
        Rng rng(4);
        auto const x = random_vector(p, 50, rng), y = random_vector(p, 50, rng);
        auto const seq = krylov_scalar(*mv, x, y, 2 * 50 + 8);
        auto const f = berlekamp_massey(seq, p);
        auto mv2 = make_sequential_matvec(a);
        auto const kv = mksol_scalar(*mv2, y, f);
        EXPECT_TRUE(kv.verified);
        EXPECT_GE(kv.shift, 1u);
        EXPECT_EQ(kv.horner_spmvs, f.size() - 1 - kv.shift);
        EXPECT_LE(kv.tail_spmvs, kv.shift);
        EXPECT_EQ(mv2->applications(), kv.horner_spmvs + kv.tail_spmvs);
        /* independent check against the dense big-integer product */
        auto const prod = oracle::matvec(oracle::to_dense(a), oracle::to_mpz_vec(kv.w));
        for (auto const & z : prod)
            EXPECT_EQ(z, 0);
        EXPECT_TRUE(verify_kernel(a, kv.w));
    }
}

TEST(Solver, MksolFailsOnInvertibleMatrix)
{
    auto const & p = p1009();
    auto const id = identity_matrix(p, 12);
    Rng rng(5);
    auto const x = random_vector(p, 12, rng), y = random_vector(p, 12, rng);
    auto mv = make_sequential_matvec(id);
    auto const f = berlekamp_massey(krylov_scalar(*mv, x, y, 30), p);
    EXPECT_EQ(f, poly(p, {-1, 1}));
    EXPECT_THROW(mksol_scalar(*mv, y, f), SolverFailure);

    SolveOptions o;
    o.bp = {1, 2};
    EXPECT_THROW(
        {
            try {
                solve_kernel(sequential_factory(id), o);
            } catch (SolverFailure const & e) {
                EXPECT_FALSE(e.retry());
                throw;
            }
        },
        SolverFailure);
}

TEST(Solver, MksolWithoutShiftUsesNoTail)
{
    /* A y = 0 directly: F = X, s = 1, G = 1, candidate y, one tail product */
    auto const & p = p1009();
    SparseMatrix zero(p, 5, 5);
    for (int i = 0; i < 5; ++i)
        zero.append_row({});
    Rng rng(6);
    auto const y = random_vector(p, 5, rng);
    auto mv = make_sequential_matvec(zero);
    auto const kv = mksol_scalar(*mv, y, poly(p, {0, 1}));
    EXPECT_EQ(kv.horner_spmvs, 0u);
    EXPECT_EQ(kv.tail_spmvs, 1u);
    EXPECT_EQ(kv.w, y);
    /* s = 0 and G(A) y = 0 leaves nothing to extract */
    EXPECT_THROW(mksol_scalar(*mv, Vector(5, Residue{}), poly(p, {1})), SolverFailure);
}

TEST(Solver, KrylovBlockAgainstDenseOracle)
{
    auto const & p = p1009();
    Rng rng(7);
    auto const a = random_dense_like(p, 40, rng, 0.15);
    auto const X = random_block(p, 40, 4, 11, 1);
    auto const Y = random_block(p, 40, 2, 11, 2);
    KrylovStats st;
    auto const seq = krylov_block(sequential_factory(a), X, Y, 40, {}, &st);
    EXPECT_EQ(st.spmvs, (std::vector<std::uint64_t>{40, 40}));
    for (std::uint32_t r = 0; r < 4; ++r)
        for (std::uint32_t c = 0; c < 2; ++c) {
            auto const ref = dense_sequence(a, X[r], Y[c], 40);
            for (std::uint64_t i = 0; i < 40; ++i)
                ASSERT_EQ(sldlag::to_mpz(seq.at(i, r, c)), ref[i]);
        }

    auto const id = identity_matrix(p, 40);
    auto const sid = krylov_block(sequential_factory(id), X, Y, 5);
    for (std::uint64_t i = 0; i < 5; ++i)
        for (std::uint32_t r = 0; r < 4; ++r)
            for (std::uint32_t c = 0; c < 2; ++c)
                EXPECT_EQ(sid.at(i, r, c), dot(p, X[r], Y[c]));
}

TEST(Solver, KrylovColumnsAreIndependent)
{
    auto const p = PrimeModulus::random_prime(120, 2);
    auto const a = corpus_matrix(p, 120, 1);
    auto const X = random_block(p, 120, 6, 3, 1);
    auto const Y = random_block(p, 120, 3, 3, 2);
    auto const joint = krylov_block(sequential_factory(a), X, Y, 70);
    KrylovOptions par;
    par.contexts = 3;
    EXPECT_EQ(krylov_block(sequential_factory(a), X, Y, 70, par), joint);
    for (std::uint32_t c = 0; c < 3; ++c) {
        auto const alone = krylov_block(sequential_factory(a), X, {Y[c]}, 70);
        EXPECT_EQ(alone, joint.column(c));
    }
}

TEST(Solver, KrylovBlockOneByOneIsScalar)
{
    auto const & p = p1009();
    Rng rng(8);
    auto const a = random_dense_like(p, 30, rng, 0.1);
    auto const x = random_vector(p, 30, rng), y = random_vector(p, 30, rng);
    auto mv = make_sequential_matvec(a);
    auto const s = krylov_scalar(*mv, x, y, 64);
    auto const b = krylov_block(sequential_factory(a), {x}, {y}, 64);
    EXPECT_EQ(b.terms, s);
}

TEST(Solver, ScalarAndBlockPathsAgreeForOneByOne)
{
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        auto const p = seed % 2 ? p1009() : PrimeModulus::random_prime(64, seed);
        auto const a = corpus_matrix(p, 50 + 10 * seed, seed);
        std::uint64_t const N = a.nrows();
        auto const X = random_block(p, N, 1, seed, 1);
        auto const Y = random_block(p, N, 1, seed, 2);
        std::uint64_t const count = krylov_length(N, {1, 1}, 32);
        auto mv = make_sequential_matvec(a);
        auto const s = krylov_scalar(*mv, X[0], Y[0], count);
        auto const b = krylov_block(sequential_factory(a), X, Y, count);
        ASSERT_EQ(b.terms, s);
        auto const f = berlekamp_massey(s, p);
        auto const g = block_lingen(b, {1, 1}, N, p);
        ASSERT_EQ(g.polys.size(), 1u);
        EXPECT_EQ(g.polys[0], f) << seed;
        auto m1 = make_sequential_matvec(a), m2 = make_sequential_matvec(a);
        auto const ks = mksol_scalar(*m1, Y[0], f);
        auto const kb = mksol_block(*m2, Y, g);
        EXPECT_EQ(ks.w, kb.w);
        EXPECT_EQ(ks.horner_spmvs, kb.horner_spmvs);
    }
}

TEST(Solver, BlockLingenAnnihilatesWindow)
{
    auto const & p = p1009();
    for (std::uint64_t seed = 0; seed < 4; ++seed) {
        auto const a = corpus_matrix(p, 60, seed);
        BlockingParams const bp{2, 4};
        auto const X = random_block(p, 60, 4, seed, 1);
        auto const Y = random_block(p, 60, 2, seed, 2);
        auto const seq = krylov_block(sequential_factory(a), X, Y, krylov_length(60, bp, 32));
        auto const g = block_lingen(seq, bp, 60, p);
        EXPECT_LE(g.degree(), generator_degree_bound(60, bp));
        EXPECT_GE(g.valuation(p), 1u);
        /* direct window check, written independently of annihilates() */
        std::uint64_t const window = seq.count - g.degree();
        EXPECT_GE(window, ceil_div(60, 4));
        for (std::uint64_t k = 0; k < window; ++k)
            for (std::uint32_t r = 0; r < 4; ++r) {
                mpz_class s = 0;
                for (std::uint32_t j = 0; j < 2; ++j)
                    for (std::size_t i = 0; i < g.polys[j].size(); ++i)
                        s += sldlag::to_mpz(g.polys[j][i]) * sldlag::to_mpz(seq.at(k + i, r, j));
                ASSERT_EQ(s % 1009, 0) << "k " << k;
            }
        auto mv = make_sequential_matvec(a);
        auto const kv = mksol_block(*mv, Y, g);
        EXPECT_TRUE(verify_kernel(a, kv.w));
    }
}

TEST(Solver, BlockLingenRecoversSmallRecurrence)
{
    /* a 9 x 9 operator seen through long blocks: the generator degree is
     * tied to the operator size, far below the sequence length */
    auto const & p = p1009();
    Rng rng(9);
    auto const small = random_dense_like(p, 9, rng, 0.6);
    BlockingParams const bp{3, 6};
    auto const X = random_block(p, 9, 6, 9, 1);
    auto const Y = random_block(p, 9, 3, 9, 2);
    auto const seq = krylov_block(sequential_factory(small), X, Y, 40);
    try {
        auto const g = block_lingen(seq, bp, 9, p);
        EXPECT_LE(g.degree(), generator_degree_bound(9, bp));
        EXPECT_TRUE(annihilates(seq, g, p, seq.count - g.degree()));
    } catch (GeneratorFailure const &) {
        /* a non-singular operator has no generator with F(0) = 0; the
         * fallback column must still annihilate */
        FAIL() << "generator not found";
    }
}

TEST(Solver, MksolBlockOnCorpus)
{
    auto const p = PrimeModulus::from_word(0xffffffffffffffc5ULL);
    auto const a = corpus_matrix(p, 500, 1, 12);
    SolveOptions o;
    o.bp = {2, 4};
    o.seed = 1;
    auto const rep = solve_kernel(sequential_factory(a), o);
    EXPECT_TRUE(rep.kernel.verified);
    EXPECT_TRUE(verify_kernel(a, rep.kernel.w));
    std::uint64_t const count = krylov_length(500, o.bp, 32);
    EXPECT_EQ(rep.krylov_spmvs, (std::vector<std::uint64_t>{count, count}));
    EXPECT_EQ(rep.mksol_spmvs, rep.kernel.horner_spmvs + rep.kernel.tail_spmvs);
    EXPECT_EQ(rep.kernel.horner_spmvs, rep.generator_degree - rep.kernel.shift);
    EXPECT_LE(rep.kernel.tail_spmvs, rep.kernel.shift);
}

TEST(Solver, MksolBlockOnLargerCorpusWideModulus)
{
    auto const p = PrimeModulus::random_prime(200, 17);
    auto const a = corpus_matrix(p, 2000, 2, 10);
    SolveOptions o;
    o.bp = {4, 8};
    o.seed = 2;
    auto const rep = solve_kernel(sequential_factory(a), o);
    EXPECT_TRUE(verify_kernel(a, rep.kernel.w));
}

TEST(Solver, VerifyKernel)
{
    auto const p = PrimeModulus::random_prime(80, 3);
    CorpusProfile prof;
    prof.n = 200;
    prof.gamma = 10;
    prof.seed = 4;
    auto const c = generate_corpus(prof, p);
    EXPECT_FALSE(verify_kernel(c.matrix, Vector(200, Residue{})));
    EXPECT_TRUE(verify_kernel(c.matrix, c.planted.front().witness(p, 200)));
    Rng rng(5);
    int falses = 0;
    for (int t = 0; t < 100; ++t)
        falses += !verify_kernel(c.matrix, random_vector(p, 200, rng));
    EXPECT_EQ(falses, 100);
    EXPECT_THROW(verify_kernel(c.matrix, Vector(3)), DimensionMismatch);
}

TEST(Solver, WiedemannAndBlockDriversOnGrid)
{
    auto const p = PrimeModulus::random_prime(64, 8);
    auto const a = corpus_matrix(p, 150, 6);
    GridSpec const g{2, 2};
    auto const split_ptr = std::make_shared<BlockSplit const>(split(a, balance_permutation(a, g), g));
    auto const b = assemble(*split_ptr);
    GridOptions go;
    go.contexts = 1;
    for (Algorithm alg : {Algorithm::Wiedemann, Algorithm::Block}) {
        SolveOptions o;
        o.algorithm = alg;
        o.bp = {2, 4};
        o.seed = 9;
        auto const on_grid = solve_kernel(grid_factory(split_ptr, go), o);
        auto const local = solve_kernel(sequential_factory(b), o);
        EXPECT_EQ(on_grid.kernel.w, local.kernel.w);
        EXPECT_TRUE(verify_kernel(b, on_grid.kernel.w));
        EXPECT_FALSE(on_grid.comm.entries.empty());
        EXPECT_TRUE(local.comm.entries.empty());
    }
}

TEST(Solver, UnitXVectorsAlsoWork)
{
    /* unit x only sees the first m coordinates, so the kernel must reach
     * them: last column is a random combination of the others */
    auto const p = PrimeModulus::random_prime(64, 4);
    Rng rng(7);
    std::uint64_t const n = 60;
    std::vector<Residue> comb(n - 1);
    for (auto & c : comb)
        c = p.random_nonzero(rng);
    SparseMatrix a(p, n, n);
    for (std::uint64_t i = 0; i < n; ++i) {
        std::vector<std::uint32_t> cols;
        std::vector<Residue> vals;
        Residue last{};
        for (std::uint32_t j = 0; j + 1 < n; ++j) {
            if (rng.uniform() >= 0.2)
                continue;
            cols.push_back(j);
            vals.push_back(p.random_nonzero(rng));
            last = p.add(last, p.mul(comb[j], vals.back()));
        }
        if (!p.is_zero(last)) {
            cols.push_back(std::uint32_t(n - 1));
            vals.push_back(last);
        }
        a.append_row_values(cols, vals);
    }
    SolveOptions o;
    o.bp = {2, 4};
    o.unit_x = true;
    auto const rep = solve_kernel(sequential_factory(a), o);
    EXPECT_TRUE(verify_kernel(a, rep.kernel.w));
}

TEST(Solver, CheckpointResumeIsBitIdentical)
{
    auto const p = PrimeModulus::random_prime(90, 6);
    auto const a = corpus_matrix(p, 200, 3);
    SolveOptions o;
    o.bp = {2, 4};
    o.seed = 5;
    auto const reference = solve_kernel(sequential_factory(a), o);

    std::string const dir = temp_dir("resume");
    CheckpointConfig ck;
    ck.dir = dir;
    ck.interval = 40;
    ck.interrupt_after = 3;
    o.checkpoint = ck;
    EXPECT_THROW(solve_kernel(sequential_factory(a), o), Interrupted);
    EXPECT_TRUE(fs::exists(fs::path(dir) / "meta"));
    EXPECT_TRUE(fs::exists(fs::path(dir) / "seq" / "col_0.sldq"));
    EXPECT_TRUE(fs::exists(fs::path(dir) / "iter" / "col_0.sldv"));

    o.checkpoint->interrupt_after = -1;
    auto const resumed = solve_kernel(sequential_factory(a), o);
    EXPECT_EQ(resumed.kernel.w, reference.kernel.w);
    /* the resumed run skipped the saved prefix */
    std::uint64_t const count = krylov_length(200, o.bp, 32);
    EXPECT_LT(resumed.krylov_spmvs[0] + resumed.krylov_spmvs[1], 2 * count);

    /* a tampered iterate is detected and that column starts over */
    auto const iter = fs::path(dir) / "iter" / "col_1.sldv";
    auto bytes = read_file(iter.string());
    bytes.back() ^= 1;
    write_file_atomic(iter.string(), bytes);
    KrylovStats st;
    KrylovOptions ko;
    ko.checkpoint = ck;
    ko.checkpoint->interrupt_after = -1;
    ko.checkpoint->identity = {{"seed", "5"}, {"attempt", "0"}, {"margin", "32"}, {"algorithm", "block"},
                               {"unit_x", "0"}};
    auto const X = random_block(p, 200, 4, 5, 0x101);
    auto const Y = random_block(p, 200, 2, 5, 0x100);
    auto const seq = krylov_block(sequential_factory(a), X, Y, count, ko, &st);
    EXPECT_EQ(st.resumed[0], count);
    EXPECT_EQ(st.resumed[1], 0u);
    EXPECT_EQ(seq, krylov_block(sequential_factory(a), X, Y, count));
    fs::remove_all(dir);
}

TEST(Solver, CheckpointOfOtherRunIsIgnored)
{
    auto const p = PrimeModulus::random_prime(70, 6);
    auto const a = corpus_matrix(p, 100, 3);
    std::string const dir = temp_dir("foreign");
    SolveOptions o;
    o.bp = {1, 2};
    o.seed = 1;
    o.checkpoint = CheckpointConfig{dir, 16, -1, {}};
    auto const first = solve_kernel(sequential_factory(a), o);
    o.seed = 2;
    auto const second = solve_kernel(sequential_factory(a), o);
    o.checkpoint.reset();
    EXPECT_EQ(second.kernel.w, solve_kernel(sequential_factory(a), o).kernel.w);
    EXPECT_NE(first.kernel.w, second.kernel.w);
    fs::remove_all(dir);
}
