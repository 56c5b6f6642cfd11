#pragma once

/* Structured Gaussian elimination.
 *
 * Cheap eliminations shrink the matrix before the iterative solver: empty
 * columns are dropped (their kernel coordinate is pinned to zero),
 * singleton columns are solved away together with their row, and a
 * weight-two column is turned into a singleton by combining its two rows.
 * Every step is logged so that a kernel vector of the reduced matrix can be
 * lifted back to the original one. */

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "sldlag/spmatrix.hpp"

namespace sldlag {

enum class SgeStepKind : std::uint8_t { DropZeroColumn = 0, SolveSingletonColumn = 1, CombineRows = 2 };

struct SgeStep {
    SgeStepKind kind = SgeStepKind::DropZeroColumn;
    /* DropZeroColumn: col. SolveSingletonColumn: row, col, pivot, others.
     * CombineRows: row = target, source, multiplier (target += m * source).
     * All indices refer to the original matrix. */
    std::uint64_t row = 0;
    std::uint64_t col = 0;
    std::uint64_t source = 0;
    Residue pivot;
    Residue multiplier;
    std::vector<std::pair<std::uint64_t, Residue>> others;

    bool operator==(SgeStep const &) const = default;
};

struct SgeTranscript {
    PrimeModulus modulus;
    std::uint64_t original_nrows = 0;
    std::uint64_t original_ncols = 0;
    std::vector<SgeStep> steps;
    std::vector<std::uint64_t> column_map; // reduced column -> original column
    std::vector<std::uint64_t> row_map;    // reduced row -> original row
    std::vector<std::uint64_t> fixed_zero_cols;

    bool operator==(SgeTranscript const &) const = default;
};

struct SgeOptions {
    /* 0 selects four times the average row weight of the input */
    std::uint64_t max_fill_row_weight = 0;
    /* stop once nnz * 12 bytes fits; 0 disables the memory criterion */
    std::uint64_t memory_budget_bytes = 0;
};

struct SgeResult {
    SparseMatrix reduced;
    SgeTranscript transcript;
    /* projected cost before the first and after every accepted step */
    std::vector<unsigned __int128> cost_trace;
    std::string stop_reason;
};

/* nrows * nnz */
unsigned __int128 projected_cost(SparseMatrix const & a);
inline constexpr std::uint64_t kSgeBytesPerEntry = 12;

SgeResult sge_reduce(SparseMatrix const & a, SgeOptions const & opts = {});

/* Re-executes the transcript on the original matrix and returns the
 * reduced matrix it describes. */
SparseMatrix sge_replay(SparseMatrix const & original, SgeTranscript const & t);

/* Back-substitutes through the transcript; dropped columns become 0. */
Vector lift_kernel(SgeTranscript const & t, std::span<Residue const> w_reduced);

/* Lifting of the zero reduced vector with dropped column `which` set to 1.
 * The column was empty when it was dropped, so the result is a non-zero
 * kernel vector of the original matrix. Empty when nothing was dropped. */
Vector lift_free_column(SgeTranscript const & t, std::size_t which = 0);

std::vector<std::uint8_t> encode_transcript(SgeTranscript const & t);
SgeTranscript decode_transcript(std::span<std::uint8_t const> data);
void store_transcript(SgeTranscript const & t, std::string const & path);
SgeTranscript load_transcript(std::string const & path);

} // namespace sldlag
