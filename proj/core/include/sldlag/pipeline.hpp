#pragma once

/* End-to-end kernel computation for one matrix: structured elimination,
 * squaring of the reduced system, balancing and the 2D split, the block
 * Wiedemann solve on the grid, and lifting back to the original matrix. */

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "sldlag/balance.hpp"
#include "sldlag/gridmv.hpp"
#include "sldlag/sge.hpp"
#include "sldlag/solver.hpp"

namespace sldlag {

struct PipelineOptions {
    bool run_sge = true;
    SgeOptions sge{};
    GridSpec grid{};
    bool balance = true;
    GridOptions grid_options{};
    /* seed, blocking, algorithm, margin, retries and checkpointing */
    SolveOptions solve{};
    /* attempts at squaring a rectangular reduced system */
    unsigned fold_attempts = 3;
    /* use a kernel vector supported on a column that elimination found
     * empty when the iterative solve cannot produce one */
    bool allow_free_column = true;
};

struct StageTiming {
    std::string stage;
    double seconds = 0;
};

struct PipelineResult {
    Vector w;
    bool verified = false;
    /* "solver" or "free-column" */
    std::string route;
    std::uint64_t original_rows = 0, original_cols = 0;
    std::uint64_t reduced_rows = 0, reduced_cols = 0;
    std::uint64_t sge_steps = 0;
    std::string sge_stop_reason;
    /* size of the padded square system handed to the solver */
    std::uint64_t solved_dimension = 0;
    BlockingParams blocking{};
    double imbalance = 0;
    unsigned fold_attempts = 0;
    SolveReport solve;
    std::vector<StageTiming> timings;

    double total_seconds() const;
};

using PipelineLog = std::function<void(std::string const & stage, std::string const & message)>;

/* Square matrix with the column space of `r`. Extra rows are folded into
 * row (index mod ncols) with random non-zero multipliers; missing rows are
 * empty. Every kernel vector of `r` is a kernel vector of the result. */
SparseMatrix fold_square(SparseMatrix const & r, std::uint64_t seed);

/* Transcript of the empty elimination on `a`. */
SgeTranscript identity_transcript(SparseMatrix const & a);

/* Throws SolverFailure(retry = false) when no kernel vector can be found,
 * including the case of a trivial kernel. */
PipelineResult run_pipeline(SparseMatrix const & a, PipelineOptions const & opts, PipelineLog const & log = {});

} // namespace sldlag
