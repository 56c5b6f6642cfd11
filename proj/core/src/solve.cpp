#include <chrono>

#include "sldlag/errors.hpp"
#include "sldlag/solver.hpp"

namespace sldlag {

std::vector<Vector> random_block(PrimeModulus const & p, std::uint64_t N, std::uint32_t count,
                                 std::uint64_t seed, std::uint64_t stream)
{
    Rng rng(derive_seed(seed, stream));
    std::vector<Vector> out;
    out.reserve(count);
    for (std::uint32_t t = 0; t < count; ++t)
        out.push_back(random_vector(p, N, rng));
    return out;
}

namespace {

double seconds_since(std::chrono::steady_clock::time_point t0)
{
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

/* per-attempt random streams; 0x100 apart so they never collide with the
 * corpus streams */
constexpr std::uint64_t kStreamY = 0x100, kStreamX = 0x101, kStreamStride = 0x10;

} // namespace

SolveReport solve_kernel(MatVecFactory const & make, SolveOptions const & opts)
{
    BlockingParams const bp = opts.algorithm == Algorithm::Wiedemann ? BlockingParams{1, 1} : opts.bp;
    bp.validate();
    std::unique_ptr<MatVec> probe = make();
    std::uint64_t const N = probe->dimension();
    PrimeModulus const p = probe->modulus();
    probe.reset();
    if (bp.m > N)
        throw InvalidArgument("blocking factor m exceeds the matrix dimension");

    std::uint64_t margin = opts.margin;
    std::string last_error = "no attempt made";
    for (unsigned attempt = 0; attempt <= opts.max_retries; ++attempt) {
        std::uint64_t const stream = kStreamStride * attempt;
        std::vector<Vector> const Y = random_block(p, N, bp.n, opts.seed, kStreamY + stream);
        std::vector<Vector> X;
        if (opts.unit_x) {
            for (std::uint32_t r = 0; r < bp.m; ++r) {
                X.emplace_back(N, Residue{});
                X.back()[r] = p.one();
            }
        } else {
            X = random_block(p, N, bp.m, opts.seed, kStreamX + stream);
        }
        std::uint64_t const count = krylov_length(N, bp, margin);

        SolveReport rep;
        rep.attempts = attempt + 1;
        rep.sequence_length = count;
        rep.margin = margin;

        KrylovOptions kopts;
        kopts.contexts = opts.contexts;
        if (opts.checkpoint) {
            kopts.checkpoint = *opts.checkpoint;
            auto & id = kopts.checkpoint->identity;
            id.emplace_back("seed", std::to_string(opts.seed));
            id.emplace_back("attempt", std::to_string(attempt));
            id.emplace_back("margin", std::to_string(margin));
            id.emplace_back("algorithm", opts.algorithm == Algorithm::Wiedemann ? "wiedemann" : "block");
            id.emplace_back("unit_x", opts.unit_x ? "1" : "0");
        }

        try {
            auto t0 = std::chrono::steady_clock::now();
            KrylovStats ks;
            BlockSequence const seq = krylov_block(make, X, Y, count, kopts, &ks);
            rep.krylov_seconds = seconds_since(t0);
            rep.krylov_spmvs = ks.spmvs;
            rep.comm = ks.comm;

            t0 = std::chrono::steady_clock::now();
            Generators g;
            if (opts.algorithm == Algorithm::Wiedemann) {
                bool all_zero = false;
                g.polys.push_back(berlekamp_massey(seq.terms, p, &all_zero));
                if (all_zero)
                    throw SolverFailure("Krylov sequence is identically zero");
            } else {
                g = block_lingen(seq, bp, N, p);
            }
            rep.lingen_seconds = seconds_since(t0);
            rep.generator_degree = g.degree();

            t0 = std::chrono::steady_clock::now();
            std::unique_ptr<MatVec> mv = make();
            rep.kernel = mksol_block(*mv, Y, g);
            rep.mksol_seconds = seconds_since(t0);
            rep.mksol_spmvs = mv->applications();
            if (auto const * log = mv->comm_log())
                rep.comm.append(*log);
            return rep;
        } catch (GeneratorFailure const & e) {
            last_error = e.what();
            margin *= 2;
        } catch (SolverFailure const & e) {
            last_error = e.what();
        }
    }
    throw SolverFailure("no kernel vector after " + std::to_string(opts.max_retries + 1) +
                            " attempts: " + last_error,
                        false);
}

} // namespace sldlag
