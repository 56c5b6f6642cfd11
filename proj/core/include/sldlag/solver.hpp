#pragma once

/* Scalar and block Wiedemann over Z/ellZ.
 *
 * The solver only needs products v = B u, supplied through MatVec; a
 * MatVec may wrap the sequential kernel or a grid engine. Block Wiedemann
 * runs three stages:
 *   Krylov   a_i = X^T B^i Y, one independent SpMV chain per column of Y;
 *   Lingen   a vector generator (F^(0), ..., F^(n-1)) of that sequence;
 *   Mksol    w = sum_j G^(j)(B) y^(j), with F = X^s G, followed by at most
 *            s further products until B w = 0.
 * Scalar Wiedemann is the n = m = 1 case with Berlekamp-Massey in place of
 * the block generator. */

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "sldlag/balance.hpp"
#include "sldlag/gridmv.hpp"
#include "sldlag/spmatrix.hpp"

namespace sldlag {

using Polynomial = std::vector<Residue>; // low degree first

struct BlockingParams {
    std::uint32_t n = 1;
    std::uint32_t m = 2;

    /* "n,m" or "n" (then m = 2n) */
    static BlockingParams parse(std::string const & s);
    void validate() const;
    bool operator==(BlockingParams const &) const = default;
};

inline std::uint64_t ceil_div(std::uint64_t a, std::uint64_t b) { return (a + b - 1) / b; }

/* ceil(N/n) + ceil(N/m) + margin */
std::uint64_t krylov_length(std::uint64_t N, BlockingParams const & bp, std::uint64_t margin);

class MatVec {
  public:
    virtual ~MatVec() = default;
    virtual std::uint64_t dimension() const = 0;
    virtual PrimeModulus const & modulus() const = 0;
    /* Communication log when the product runs on a grid. */
    virtual CommLog const * comm_log() const { return nullptr; }

    void apply(std::span<Residue const> in, std::span<Residue> out)
    {
        ++applications_;
        do_apply(in, out);
    }
    Vector apply(std::span<Residue const> in)
    {
        Vector out(dimension());
        apply(in, out);
        return out;
    }
    std::uint64_t applications() const { return applications_; }

  protected:
    virtual void do_apply(std::span<Residue const> in, std::span<Residue> out) = 0;

  private:
    std::uint64_t applications_ = 0;
};

using MatVecFactory = std::function<std::unique_ptr<MatVec>()>;

/* The matrix must be square and outlive the MatVec. */
std::unique_ptr<MatVec> make_sequential_matvec(SparseMatrix const & a);
/* Products of the permuted, padded matrix held by the split. */
std::unique_ptr<MatVec> make_grid_matvec(BlockSplit split, GridOptions const & opts);

MatVecFactory sequential_factory(SparseMatrix const & a);
MatVecFactory grid_factory(std::shared_ptr<BlockSplit const> split, GridOptions opts);

/* ---- Krylov ---------------------------------------------------------- */

/* m x n matrices a_i, term-major then row-major. */
struct BlockSequence {
    std::uint32_t m = 1;
    std::uint32_t n = 1;
    std::uint64_t count = 0;
    std::vector<Residue> terms;

    Residue const & at(std::uint64_t i, std::uint32_t r, std::uint32_t c) const
    {
        return terms[(i * m + r) * n + c];
    }
    Residue & at(std::uint64_t i, std::uint32_t r, std::uint32_t c) { return terms[(i * m + r) * n + c]; }
    /* Column c as its own m x 1 sequence. */
    BlockSequence column(std::uint32_t c) const;
    bool operator==(BlockSequence const &) const = default;
};

struct CheckpointConfig {
    std::string dir;
    std::uint64_t interval = std::uint64_t(1) << 14;
    /* Testing hook: throw Interrupted once this many checkpoints have been
     * written by the current run. Negative disables it. */
    std::int64_t interrupt_after = -1;
    /* Extra key=value pairs identifying the run, checked on resume. */
    std::vector<std::pair<std::string, std::string>> identity;
};

struct KrylovOptions {
    unsigned contexts = 0; // 0: SLDLAG_CONTEXTS
    std::optional<CheckpointConfig> checkpoint;
};

struct KrylovStats {
    std::vector<std::uint64_t> spmvs;   // per column task, in this run
    std::vector<std::uint64_t> resumed; // iteration each column resumed from
    CommLog comm;
};

/* a_i = x^T B^i y for i < count; performs exactly count products (the last
 * one yields the iterate a resumed run would continue from). */
std::vector<Residue> krylov_scalar(MatVec & a, std::span<Residue const> x, std::span<Residue const> y,
                                   std::uint64_t count);

BlockSequence krylov_block(MatVecFactory const & make, std::vector<Vector> const & X,
                           std::vector<Vector> const & Y, std::uint64_t count,
                           KrylovOptions const & opts = {}, KrylovStats * stats = nullptr);

/* ---- generators ------------------------------------------------------ */

/* Monic minimal polynomial F of the sequence: sum_i f_i a_{k+i} = 0 for
 * every k with k + deg F < len. The all-zero sequence gives F = 1 and sets
 * *all_zero. */
Polynomial berlekamp_massey(std::span<Residue const> seq, PrimeModulus const & p, bool * all_zero = nullptr);

struct Generators {
    std::vector<Polynomial> polys; // n of them

    std::uint64_t degree() const;
    /* min over j of the X-adic valuation */
    std::uint64_t valuation(PrimeModulus const & p) const;
    bool is_zero(PrimeModulus const & p) const;
};

/* Highest degree block_lingen accepts. */
std::uint64_t generator_degree_bound(std::uint64_t N, BlockingParams const & bp);

/* Throws GeneratorFailure if no generator within the degree bound exists. */
Generators block_lingen(BlockSequence const & seq, BlockingParams const & bp, std::uint64_t N,
                        PrimeModulus const & p);

/* True when sum_i sum_j f^(j)_i a_{k+i}[:, j] = 0 for all k < window; the
 * window must fit in the sequence. */
bool annihilates(BlockSequence const & seq, Generators const & g, PrimeModulus const & p, std::uint64_t window);
/* Longest window the sequence allows for g. */
std::uint64_t annihilation_window(BlockSequence const & seq, Generators const & g);

/* ---- kernel vectors -------------------------------------------------- */

struct KernelVector {
    Vector w;
    bool verified = false;
    std::uint64_t horner_spmvs = 0;
    std::uint64_t tail_spmvs = 0;
    std::uint64_t shift = 0; // s in F = X^s G
};

/* Throw SolverFailure when the candidate vanishes or the tail does not
 * reach the kernel within s products. */
KernelVector mksol_scalar(MatVec & a, std::span<Residue const> y, Polynomial const & f);
KernelVector mksol_block(MatVec & a, std::vector<Vector> const & Y, Generators const & g);

/* A w = 0 and w != 0, exactly. */
bool verify_kernel(SparseMatrix const & a, std::span<Residue const> w);

/* ---- driver ---------------------------------------------------------- */

enum class Algorithm { Wiedemann, Block };
Algorithm parse_algorithm(std::string const & s);

struct SolveOptions {
    Algorithm algorithm = Algorithm::Block;
    BlockingParams bp{};
    std::uint64_t seed = 0;
    std::uint64_t margin = 32;
    /* x-vectors are the first m unit vectors instead of random */
    bool unit_x = false;
    unsigned max_retries = 3;
    unsigned contexts = 0;
    std::optional<CheckpointConfig> checkpoint;
};

struct SolveReport {
    KernelVector kernel;
    unsigned attempts = 0;
    std::uint64_t sequence_length = 0;
    std::uint64_t margin = 0;
    std::uint64_t generator_degree = 0;
    std::vector<std::uint64_t> krylov_spmvs;
    std::uint64_t mksol_spmvs = 0;
    double krylov_seconds = 0, lingen_seconds = 0, mksol_seconds = 0;
    CommLog comm;
};

/* Random blocks for one attempt; deterministic in (seed, attempt). */
std::vector<Vector> random_block(PrimeModulus const & p, std::uint64_t N, std::uint32_t count,
                                 std::uint64_t seed, std::uint64_t stream);

/* Full solve with retries. Throws SolverFailure(retry = false) after the
 * last attempt fails. */
SolveReport solve_kernel(MatVecFactory const & make, SolveOptions const & opts);

} // namespace sldlag
