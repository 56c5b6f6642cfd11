#pragma once

/* Sparse matrices over Z/ellZ.
 *
 * Storage is CSR with a one-byte class tag per entry. The payload word of
 * an entry is the signed value for Small coefficients and an index into a
 * pool of full residues for Full ones (unused for +1/-1). A handful of
 * dense columns may be attached; they always occupy the highest global
 * column indices, so sparse column indices never refer to them. */

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "sldlag/coefficient.hpp"
#include "sldlag/modring.hpp"
#include "sldlag/rns.hpp"

namespace sldlag {

using Vector = std::vector<Residue>;

struct Entry {
    std::uint32_t col = 0;
    Coefficient coeff;
};

class SparseMatrix {
  public:
    SparseMatrix() = default;
    /* Empty rows; dense_count of the ncols columns are dense. */
    SparseMatrix(PrimeModulus const & p, std::uint64_t nrows, std::uint64_t ncols,
                 std::uint64_t dense_count = 0);

    PrimeModulus const & modulus() const { return p_; }
    std::uint64_t nrows() const { return nrows_; }
    std::uint64_t ncols() const { return ncols_; }
    std::uint64_t sparse_ncols() const { return ncols_ - dense_.size(); }
    std::uint64_t dense_count() const { return dense_.size(); }
    /* Stored sparse entries only. */
    std::uint64_t sparse_nnz() const { return col_.size(); }
    /* Sparse entries plus non-zero dense-column entries. */
    std::uint64_t nnz() const;

    /* Rows are appended in order; entries must have strictly increasing
     * columns below sparse_ncols(). Coefficients are reclassified to the
     * smallest class. Zero values are rejected. */
    void append_row(std::span<Entry const> entries);
    /* Same, from (column, value) pairs. */
    void append_row_values(std::span<std::uint32_t const> cols, std::span<Residue const> values);
    std::uint64_t rows_filled() const { return row_ptr_.size() - 1; }

    /* d-th dense column (global index sparse_ncols() + d). */
    void set_dense(std::size_t d, Vector values);
    Vector const & dense(std::size_t d) const { return dense_[d]; }

    std::uint64_t row_begin(std::uint64_t i) const { return row_ptr_[i]; }
    std::uint64_t row_end(std::uint64_t i) const { return row_ptr_[i + 1]; }
    std::uint64_t row_weight(std::uint64_t i) const { return row_ptr_[i + 1] - row_ptr_[i]; }
    std::uint32_t col(std::uint64_t k) const { return col_[k]; }
    CoeffClass cls(std::uint64_t k) const { return CoeffClass(tag_[k]); }
    std::int32_t payload(std::uint64_t k) const { return payload_[k]; }
    Coefficient coefficient(std::uint64_t k) const;
    Residue value(std::uint64_t k) const;
    std::vector<Residue> const & full_pool() const { return full_; }

    std::vector<std::uint64_t> const & row_ptr() const { return row_ptr_; }
    std::vector<std::uint32_t> const & col_idx() const { return col_; }
    std::vector<std::uint8_t> const & tags() const { return tag_; }

    /* Weight of every global column (dense columns count their non-zero
     * entries) and of every row (including dense contributions). */
    std::vector<std::uint64_t> column_weights() const;
    std::vector<std::uint64_t> row_weights() const;
    std::uint64_t max_row_weight() const;
    /* Largest |small| present (at least 1) and whether any Full value or
     * dense column occurs; this is what an RNS context must cover. */
    std::uint64_t max_small_magnitude() const;
    bool has_full_values() const;

    /* Copy with dense columns turned into ordinary sparse entries. */
    SparseMatrix materialized() const;
    /* Copy with every coefficient stored in the Full class. */
    SparseMatrix with_full_classes() const;
    /* Entry (i, j) including dense columns; zero when absent. */
    Residue at(std::uint64_t i, std::uint64_t j) const;

    /* Throws FormatError(InvariantViolation) on any broken invariant. */
    void validate() const;

    bool operator==(SparseMatrix const & o) const;

  private:
    void push_entry(std::uint32_t col, Coefficient const & c);

    PrimeModulus p_;
    std::uint64_t nrows_ = 0;
    std::uint64_t ncols_ = 0;
    std::vector<std::uint64_t> row_ptr_{0};
    std::vector<std::uint32_t> col_;
    std::vector<std::uint8_t> tag_;
    std::vector<std::int32_t> payload_;
    std::vector<Residue> full_;
    std::vector<Vector> dense_;
};

/* Identity pattern: +1 on the diagonal. */
SparseMatrix identity_matrix(PrimeModulus const & p, std::uint64_t n);

/* Reusable SpMV with an RNS context sized for the matrix. Holds scratch
 * buffers, so one kernel must not be shared between threads. */
class SpmvKernel {
  public:
    explicit SpmvKernel(SparseMatrix const & a);

    void apply(std::span<Residue const> u, std::span<Residue> v);
    Vector apply(std::span<Residue const> u);

    SparseMatrix const & matrix() const { return *a_; }
    RnsContext const & context() const { return ctx_; }

  private:
    SparseMatrix const * a_;
    RnsContext ctx_;
    std::size_t k_;
    std::vector<std::uint64_t> pool_rns_;  // full pool, entry-major
    std::vector<std::uint64_t> dense_rns_; // per dense column, per row, k limbs
    std::vector<std::uint64_t> in_;
    std::vector<std::uint64_t> neg_;
};

/* v = A u over Z/ellZ through RNS row accumulation. */
Vector spmv_sequential(SparseMatrix const & a, std::span<Residue const> u);

struct MatrixStats {
    std::uint64_t nrows = 0;
    std::uint64_t ncols = 0;
    std::uint64_t nnz = 0;
    double avg_row_weight = 0;
    double row_weight_stddev = 0;
    /* Bucket 0 counts empty columns; bucket b >= 1 counts columns whose
     * weight lies in [2^(b-1), 2^b). */
    std::vector<std::uint64_t> column_weight_histogram;
    double pm1_fraction = 0;
};

MatrixStats matrix_stats(SparseMatrix const & a);

/* SLDM / SLDV files. */
std::vector<std::uint8_t> encode_matrix(SparseMatrix const & a);
SparseMatrix decode_matrix(std::span<std::uint8_t const> data);
void store_matrix(SparseMatrix const & a, std::string const & path);
SparseMatrix load_matrix(std::string const & path);

std::vector<std::uint8_t> encode_vector(PrimeModulus const & p, std::span<Residue const> v);
/* Returns the modulus stored in the file alongside the values. */
Vector decode_vector(std::span<std::uint8_t const> data, PrimeModulus & p);
void store_vector(PrimeModulus const & p, std::span<Residue const> v, std::string const & path);
Vector load_vector(std::string const & path, PrimeModulus & p);

/* Random vector of canonical residues. */
Vector random_vector(PrimeModulus const & p, std::size_t n, Rng & rng);
bool is_zero_vector(PrimeModulus const & p, std::span<Residue const> v);

} // namespace sldlag
