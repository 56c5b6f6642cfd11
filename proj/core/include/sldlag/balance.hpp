#pragma once

/* Weight balancing and the r x c block split of a square matrix.
 *
 * Columns are sorted by decreasing weight and dealt out in serpentine
 * order over c groups, rows likewise over r groups; each group becomes a
 * contiguous index range. The matrix is padded to a multiple of lcm(r, c);
 * padded coordinates keep their own index and carry a pinned +1 diagonal
 * entry, so kernel vectors vanish on them. */

#include <cstdint>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "sldlag/spmatrix.hpp"

namespace sldlag {

struct GridSpec {
    std::uint32_t r = 1;
    std::uint32_t c = 1;

    /* "RxC", e.g. "2x2" */
    static GridSpec parse(std::string_view s);
    std::string str() const;
    std::uint64_t nodes() const { return std::uint64_t(r) * c; }
    /* lcm(r, c): number of fine vector fragments */
    std::uint64_t fragments() const;
    bool operator==(GridSpec const &) const = default;
};

/* Smallest multiple of lcm(r, c) that is >= n. */
std::uint64_t padded_size(std::uint64_t n, GridSpec const & g);

/* Maps old index -> new index, on [0, n_padded). */
struct PermutationPair {
    std::uint64_t n_padded = 0;
    std::vector<std::uint64_t> row_perm;
    std::vector<std::uint64_t> col_perm;

    bool operator==(PermutationPair const &) const = default;
};

bool is_permutation(std::vector<std::uint64_t> const & p);

PermutationPair balance_permutation(SparseMatrix const & a, GridSpec const & g);
PermutationPair identity_permutation(SparseMatrix const & a, GridSpec const & g);

/* B with B[row_perm[i], col_perm[j]] = A_padded[i, j]; dense columns are
 * materialized. */
SparseMatrix permute_pad(SparseMatrix const & a, PermutationPair const & pp);

struct BlockSplit {
    GridSpec grid;
    std::uint64_t n = 0;        // unpadded size
    std::uint64_t n_padded = 0; // multiple of lcm(r, c)
    std::uint64_t block_rows = 0;
    std::uint64_t block_cols = 0;
    std::uint64_t pad_rows = 0;
    std::uint64_t pad_cols = 0;
    /* pinned +1 entries in permuted coordinates */
    std::vector<std::pair<std::uint64_t, std::uint64_t>> pin_rows;
    /* row-major: block (i, j) at i * c + j, with local indices */
    std::vector<SparseMatrix> blocks;

    SparseMatrix const & block(std::uint32_t i, std::uint32_t j) const { return blocks[i * grid.c + j]; }
};

BlockSplit split(SparseMatrix const & a, PermutationPair const & pp, GridSpec const & g);
/* Reassembles the permuted, padded matrix from the blocks. */
SparseMatrix assemble(BlockSplit const & bs);

/* max block nnz / mean block nnz; throws InvalidArgument when all blocks
 * are empty. */
double imbalance(BlockSplit const & bs);
/* Same quantity computed straight from the permutation. */
double imbalance(SparseMatrix const & a, PermutationPair const & pp, GridSpec const & g);

std::vector<std::uint8_t> encode_permutation(PermutationPair const & pp);
PermutationPair decode_permutation(std::span<std::uint8_t const> data);
void store_permutation(PermutationPair const & pp, std::string const & path);
PermutationPair load_permutation(std::string const & path);

} // namespace sldlag
