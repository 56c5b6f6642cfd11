#pragma once

/* Synthetic matrices with the statistical shape of index-calculus
 * relation matrices: square, rows of roughly constant weight, column
 * density falling off with the index, mostly +-1 coefficients, and a
 * planted kernel so that a solution is known to exist. */

#include <cstdint>
#include <vector>

#include "sldlag/spmatrix.hpp"

namespace sldlag {

struct CorpusProfile {
    std::uint64_t n = 100000;
    double gamma = 100;
    double pm1_fraction = 0.90;
    /* column j is drawn with probability proportional to (j+1)^-decay */
    double density_decay = 0.5;
    std::uint64_t dense_cols = 0;
    std::uint64_t planted_kernel_cols = 1;
    std::uint64_t seed = 0;
    /* magnitude range of the non-unit coefficients */
    std::int32_t small_coeff_max = 1000;
};

CorpusProfile profile_ffs(std::uint64_t n = 100000);
CorpusProfile profile_nfs(std::uint64_t n = 100000);

/* Throws InvalidArgument if the profile breaks its invariants. */
void validate_profile(CorpusProfile const & prof);

/* Column `planted` equals alpha * column a + beta * column b. */
struct PlantedColumn {
    std::uint64_t planted = 0;
    std::uint64_t a = 0;
    std::uint64_t b = 0;
    Residue alpha;
    Residue beta;

    /* The three-term kernel vector (alpha, beta, -1) on (a, b, planted). */
    Vector witness(PrimeModulus const & p, std::uint64_t n) const;
};

struct Corpus {
    SparseMatrix matrix;
    std::vector<PlantedColumn> planted;
};

Corpus generate_corpus(CorpusProfile const & prof, PrimeModulus const & ell);
SparseMatrix generate(CorpusProfile const & prof, PrimeModulus const & ell);

} // namespace sldlag
