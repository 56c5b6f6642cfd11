#include <chrono>
#include <map>
#include <memory>

#include <fmt/format.h>

#include "sldlag/binio.hpp"
#include "sldlag/errors.hpp"
#include "sldlag/pipeline.hpp"

namespace sldlag {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0)
{
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

constexpr std::uint64_t kFoldStream = 0x200;

bool vanishes(SparseMatrix const & r, Vector const & w)
{
    auto const v = spmv_sequential(r, w);
    return is_zero_vector(r.modulus(), v);
}

} // namespace

double PipelineResult::total_seconds() const
{
    double s = 0;
    for (auto const & t : timings)
        s += t.seconds;
    return s;
}

SparseMatrix fold_square(SparseMatrix const & r_in, std::uint64_t seed)
{
    SparseMatrix const r = r_in.dense_count() ? r_in.materialized() : r_in;
    PrimeModulus const & p = r.modulus();
    std::uint64_t const n = r.ncols();
    SparseMatrix s(p, n, n);
    std::vector<std::uint32_t> cols;
    Vector vals;
    if (r.nrows() <= n) {
        for (std::uint64_t i = 0; i < r.nrows(); ++i) {
            cols.clear();
            vals.clear();
            for (auto k = r.row_begin(i); k < r.row_end(i); ++k) {
                cols.push_back(r.col(k));
                vals.push_back(r.value(k));
            }
            s.append_row_values(cols, vals);
        }
        for (std::uint64_t i = r.nrows(); i < n; ++i)
            s.append_row_values({}, {});
        return s;
    }

    Rng rng(seed);
    std::vector<Residue> mult(r.nrows() - n);
    for (auto & m : mult)
        m = p.random_nonzero(rng);
    std::map<std::uint32_t, Residue> acc;
    for (std::uint64_t t = 0; t < n; ++t) {
        acc.clear();
        auto add_row = [&](std::uint64_t i, Residue const * mu) {
            for (auto k = r.row_begin(i); k < r.row_end(i); ++k) {
                Residue v = r.value(k);
                if (mu)
                    v = p.mul(v, *mu);
                auto [it, fresh] = acc.try_emplace(r.col(k), v);
                if (!fresh)
                    it->second = p.add(it->second, v);
            }
        };
        add_row(t, nullptr);
        for (std::uint64_t e = t + n; e < r.nrows(); e += n)
            add_row(e, &mult[e - n]);
        cols.clear();
        vals.clear();
        for (auto const & [c, v] : acc) {
            if (p.is_zero(v))
                continue;
            cols.push_back(c);
            vals.push_back(v);
        }
        s.append_row_values(cols, vals);
    }
    return s;
}

SgeTranscript identity_transcript(SparseMatrix const & a)
{
    SgeTranscript t;
    t.modulus = a.modulus();
    t.original_nrows = a.nrows();
    t.original_ncols = a.ncols();
    t.row_map.resize(a.nrows());
    t.column_map.resize(a.ncols());
    for (std::uint64_t i = 0; i < a.nrows(); ++i)
        t.row_map[i] = i;
    for (std::uint64_t j = 0; j < a.ncols(); ++j)
        t.column_map[j] = j;
    return t;
}

namespace {

PipelineResult run_stages(SparseMatrix const & a, PipelineOptions const & opts, PipelineLog const & log,
                          std::string & stage)
{
    auto note = [&](std::string const & where, std::string const & msg) {
        if (log)
            log(where, msg);
    };
    PipelineResult res;
    res.original_rows = a.nrows();
    res.original_cols = a.ncols();
    PrimeModulus const & p = a.modulus();

    stage = "sge";
    auto t0 = Clock::now();
    SgeResult sge;
    if (opts.run_sge) {
        sge = sge_reduce(a, opts.sge);
    } else {
        sge.reduced = a.dense_count() ? a.materialized() : a;
        sge.transcript = identity_transcript(a);
        sge.stop_reason = "disabled";
    }
    res.timings.push_back({"sge", seconds_since(t0)});
    res.reduced_rows = sge.reduced.nrows();
    res.reduced_cols = sge.reduced.ncols();
    res.sge_steps = sge.transcript.steps.size();
    res.sge_stop_reason = sge.stop_reason;
    note("sge", fmt::format("{}x{} -> {}x{} in {} steps ({})", a.nrows(), a.ncols(), res.reduced_rows,
                            res.reduced_cols, res.sge_steps, sge.stop_reason));

    auto free_column = [&](std::string const & why) {
        Vector w = lift_free_column(sge.transcript, 0);
        if (w.empty() || !opts.allow_free_column)
            throw SolverFailure(why, false);
        stage = "lift";
        auto tv = Clock::now();
        bool const ok = verify_kernel(a, w);
        res.timings.push_back({"verify", seconds_since(tv)});
        if (!ok)
            throw Error("lifted free-column vector does not annihilate the original matrix");
        note("lift", "kernel vector taken from an eliminated empty column");
        res.w = std::move(w);
        res.verified = true;
        res.route = "free-column";
        return res;
    };

    if (sge.reduced.ncols() == 0)
        return free_column("trivial kernel: elimination left no columns");

    std::string last_error;
    for (unsigned attempt = 0; attempt < std::max(1u, opts.fold_attempts); ++attempt) {
        res.fold_attempts = attempt + 1;
        stage = "fold";
        t0 = Clock::now();
        SparseMatrix const sq = fold_square(sge.reduced, derive_seed(opts.solve.seed, kFoldStream + attempt));
        res.timings.push_back({"fold", seconds_since(t0)});

        stage = "balance";
        t0 = Clock::now();
        PermutationPair const pp =
            opts.balance ? balance_permutation(sq, opts.grid) : identity_permutation(sq, opts.grid);
        auto bs = std::make_shared<BlockSplit const>(split(sq, pp, opts.grid));
        res.solved_dimension = bs->n_padded;
        res.imbalance = sq.nnz() ? imbalance(*bs) : 1.0;
        res.timings.push_back({"balance", seconds_since(t0)});
        note("balance", fmt::format("grid {} padded to {} imbalance {:.4f}", opts.grid.str(), bs->n_padded,
                                    res.imbalance));

        SolveOptions so = opts.solve;
        so.contexts = so.contexts ? so.contexts : opts.grid_options.contexts;
        if (so.algorithm == Algorithm::Block && so.bp.m > bs->n_padded) {
            /* tiny reduced systems: fall back to the widest legal blocking */
            std::uint32_t const m = std::uint32_t(bs->n_padded);
            so.bp = {std::min(so.bp.n, m), m};
        }
        res.blocking = so.algorithm == Algorithm::Wiedemann ? BlockingParams{1, 1} : so.bp;
        if (so.checkpoint) {
            auto const digest = fnv1a64(encode_matrix(assemble(*bs)));
            so.checkpoint->identity.emplace_back("matrix", fmt::format("{:016x}", digest));
            so.checkpoint->identity.emplace_back("fold", std::to_string(attempt));
            so.checkpoint->identity.emplace_back("grid", opts.grid.str());
        }

        stage = "solve";
        try {
            res.solve = solve_kernel(grid_factory(bs, opts.grid_options), so);
        } catch (SolverFailure const & e) {
            last_error = e.what();
            note("solve", last_error);
            break;
        }
        res.timings.push_back({"krylov", res.solve.krylov_seconds});
        res.timings.push_back({"lingen", res.solve.lingen_seconds});
        res.timings.push_back({"mksol", res.solve.mksol_seconds});
        note("solve", fmt::format("attempts {} degree {} krylov {:.3f}s lingen {:.3f}s mksol {:.3f}s comm {} bytes",
                                  res.solve.attempts, res.solve.generator_degree, res.solve.krylov_seconds,
                                  res.solve.lingen_seconds, res.solve.mksol_seconds, res.solve.comm.total_bytes()));

        stage = "lift";
        t0 = Clock::now();
        Vector const & wb = res.solve.kernel.w;
        Vector ws(sq.ncols());
        for (std::uint64_t j = 0; j < sq.ncols(); ++j)
            ws[j] = wb[pp.col_perm[j]];
        bool const reduced_ok = !is_zero_vector(p, ws) && vanishes(sge.reduced, ws);
        if (!reduced_ok) {
            res.timings.push_back({"verify", seconds_since(t0)});
            last_error = "kernel vector of the squared system misses the reduced one";
            note("fold", last_error);
            continue;
        }
        Vector w = lift_kernel(sge.transcript, ws);
        res.timings.push_back({"lift", seconds_since(t0)});
        stage = "verify";
        t0 = Clock::now();
        bool const ok = verify_kernel(a, w);
        res.timings.push_back({"verify", seconds_since(t0)});
        if (!ok)
            throw Error("lifted kernel vector does not annihilate the original matrix");
        res.w = std::move(w);
        res.verified = true;
        res.route = "solver";
        return res;
    }
    return free_column(last_error.empty() ? "no kernel vector found" : last_error);
}

} // namespace

PipelineResult run_pipeline(SparseMatrix const & a, PipelineOptions const & opts, PipelineLog const & log)
{
    std::string stage = "setup";
    auto tag = [&](char const * what) { return stage + ": " + what; };
    try {
        return run_stages(a, opts, log, stage);
    } catch (Interrupted const &) {
        throw;
    } catch (SolverFailure const & e) {
        throw SolverFailure(tag(e.what()), e.retry());
    } catch (FormatError const & e) {
        throw FormatError(e.kind(), tag(e.what()));
    } catch (InvalidArgument const & e) {
        throw InvalidArgument(tag(e.what()));
    } catch (TimeoutError const & e) {
        throw TimeoutError(tag(e.what()));
    } catch (ProtocolError const & e) {
        throw ProtocolError(tag(e.what()));
    } catch (Error const & e) {
        throw Error(tag(e.what()));
    }
}

} // namespace sldlag
