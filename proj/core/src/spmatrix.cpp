#include "sldlag/spmatrix.hpp"

#include <algorithm>
#include <cmath>

#include "sldlag/errors.hpp"

namespace sldlag {

namespace {

/* acc mod m for m < 2^63 */
inline std::uint64_t reduce128(unsigned __int128 acc, std::uint64_t m)
{
    auto const hi = std::uint64_t(acc >> 64);
    auto const lo = std::uint64_t(acc);
    if (hi == 0)
        return lo % m;
#if defined(__x86_64__)
    std::uint64_t q, r;
    std::uint64_t const h = hi % m;
    __asm__("divq %4" : "=a"(q), "=d"(r) : "a"(lo), "d"(h), "rm"(m));
    (void)q;
    return r;
#else
    return std::uint64_t(acc % m);
#endif
}

FormatError invariant(std::string const & msg)
{
    return FormatError(FormatError::Kind::InvariantViolation, msg);
}

} // namespace

SparseMatrix::SparseMatrix(PrimeModulus const & p, std::uint64_t nrows, std::uint64_t ncols,
                           std::uint64_t dense_count)
    : p_(p), nrows_(nrows), ncols_(ncols)
{
    if (dense_count > ncols)
        throw InvalidArgument("more dense columns than columns");
    if (ncols - dense_count > std::uint64_t(UINT32_MAX) + 1)
        throw InvalidArgument("too many sparse columns for 32-bit indices");
    row_ptr_.reserve(nrows + 1);
    dense_.assign(dense_count, Vector(nrows, Residue{}));
}

void SparseMatrix::push_entry(std::uint32_t col, Coefficient const & c)
{
    Coefficient cc = c;
    switch (c.cls) {
    case CoeffClass::PlusOne:
    case CoeffClass::MinusOne:
        break;
    case CoeffClass::Small:
        if (c.small == 0)
            throw InvalidArgument("zero coefficient");
        if (c.small == 1 || c.small == -1 || p_.bit_length() <= 33)
            cc = classify(p_, c.value(p_));
        break;
    case CoeffClass::Full:
        if (!p_.is_canonical(c.full))
            throw InvalidArgument("non-canonical coefficient");
        cc = classify(p_, c.full);
        break;
    }
    if (cc.cls == CoeffClass::Full && p_.is_zero(cc.full))
        throw InvalidArgument("zero coefficient");
    if (cc.cls == CoeffClass::Small && p_.is_zero(cc.value(p_)))
        throw InvalidArgument("zero coefficient");
    col_.push_back(col);
    tag_.push_back(std::uint8_t(cc.cls));
    if (cc.cls == CoeffClass::Small) {
        payload_.push_back(cc.small);
    } else if (cc.cls == CoeffClass::Full) {
        payload_.push_back(std::int32_t(full_.size()));
        full_.push_back(cc.full);
    } else {
        payload_.push_back(0);
    }
}

void SparseMatrix::append_row(std::span<Entry const> entries)
{
    if (rows_filled() >= nrows_)
        throw InvalidArgument("all rows already present");
    std::uint64_t const limit = sparse_ncols();
    std::size_t const start = col_.size();
    try {
        for (std::size_t t = 0; t < entries.size(); ++t) {
            if (entries[t].col >= limit)
                throw InvalidArgument("column index out of range");
            if (t > 0 && entries[t].col <= entries[t - 1].col)
                throw InvalidArgument("columns must be strictly increasing within a row");
            push_entry(entries[t].col, entries[t].coeff);
        }
    } catch (...) {
        col_.resize(start);
        tag_.resize(start);
        payload_.resize(start);
        throw;
    }
    row_ptr_.push_back(col_.size());
}

void SparseMatrix::append_row_values(std::span<std::uint32_t const> cols,
                                     std::span<Residue const> values)
{
    if (cols.size() != values.size())
        throw DimensionMismatch("column and value lists differ in length");
    std::vector<Entry> e(cols.size());
    for (std::size_t t = 0; t < cols.size(); ++t)
        e[t] = {cols[t], Coefficient::full_value(values[t])};
    append_row(e);
}

void SparseMatrix::set_dense(std::size_t d, Vector values)
{
    if (d >= dense_.size())
        throw InvalidArgument("dense column index out of range");
    if (values.size() != nrows_)
        throw DimensionMismatch("dense column length differs from row count");
    for (auto const & v : values)
        if (!p_.is_canonical(v))
            throw InvalidArgument("non-canonical dense value");
    dense_[d] = std::move(values);
}

std::uint64_t SparseMatrix::nnz() const
{
    std::uint64_t n = col_.size();
    for (auto const & d : dense_)
        for (auto const & v : d)
            n += !p_.is_zero(v);
    return n;
}

Coefficient SparseMatrix::coefficient(std::uint64_t k) const
{
    switch (CoeffClass(tag_[k])) {
    case CoeffClass::PlusOne:
        return Coefficient::plus_one();
    case CoeffClass::MinusOne:
        return Coefficient::minus_one();
    case CoeffClass::Small:
        return Coefficient::small_value(payload_[k]);
    case CoeffClass::Full:
        break;
    }
    return Coefficient::full_value(full_[std::size_t(payload_[k])]);
}

Residue SparseMatrix::value(std::uint64_t k) const
{
    switch (CoeffClass(tag_[k])) {
    case CoeffClass::PlusOne:
        return p_.one();
    case CoeffClass::MinusOne:
        return p_.neg(p_.one());
    case CoeffClass::Small:
        return p_.from_i64(payload_[k]);
    case CoeffClass::Full:
        break;
    }
    return full_[std::size_t(payload_[k])];
}

std::vector<std::uint64_t> SparseMatrix::column_weights() const
{
    std::vector<std::uint64_t> w(ncols_, 0);
    for (auto c : col_)
        ++w[c];
    for (std::size_t d = 0; d < dense_.size(); ++d)
        for (auto const & v : dense_[d])
            w[sparse_ncols() + d] += !p_.is_zero(v);
    return w;
}

std::vector<std::uint64_t> SparseMatrix::row_weights() const
{
    std::vector<std::uint64_t> w(nrows_, 0);
    for (std::uint64_t i = 0; i < rows_filled(); ++i)
        w[i] = row_weight(i);
    for (auto const & d : dense_)
        for (std::uint64_t i = 0; i < nrows_; ++i)
            w[i] += !p_.is_zero(d[i]);
    return w;
}

std::uint64_t SparseMatrix::max_row_weight() const
{
    std::uint64_t m = 0;
    for (std::uint64_t i = 0; i < rows_filled(); ++i)
        m = std::max(m, row_weight(i));
    return m + dense_.size();
}

std::uint64_t SparseMatrix::max_small_magnitude() const
{
    std::uint64_t m = 1;
    for (std::size_t k = 0; k < tag_.size(); ++k)
        if (CoeffClass(tag_[k]) == CoeffClass::Small)
            m = std::max<std::uint64_t>(m, std::uint64_t(std::abs(std::int64_t(payload_[k]))));
    return m;
}

bool SparseMatrix::has_full_values() const { return !full_.empty() || !dense_.empty(); }

SparseMatrix SparseMatrix::materialized() const
{
    SparseMatrix out(p_, nrows_, ncols_, 0);
    std::vector<Entry> row;
    for (std::uint64_t i = 0; i < nrows_; ++i) {
        row.clear();
        for (std::uint64_t k = row_begin(i); k < row_end(i); ++k)
            row.push_back({col_[k], coefficient(k)});
        for (std::size_t d = 0; d < dense_.size(); ++d)
            if (!p_.is_zero(dense_[d][i]))
                row.push_back({std::uint32_t(sparse_ncols() + d), classify(p_, dense_[d][i])});
        out.append_row(row);
    }
    return out;
}

SparseMatrix SparseMatrix::with_full_classes() const
{
    SparseMatrix out = *this;
    out.full_.clear();
    for (std::size_t k = 0; k < tag_.size(); ++k) {
        Residue const v = value(k);
        out.tag_[k] = std::uint8_t(CoeffClass::Full);
        out.payload_[k] = std::int32_t(out.full_.size());
        out.full_.push_back(v);
    }
    return out;
}

Residue SparseMatrix::at(std::uint64_t i, std::uint64_t j) const
{
    if (i >= nrows_ || j >= ncols_)
        throw InvalidArgument("matrix index out of range");
    if (j >= sparse_ncols())
        return dense_[j - sparse_ncols()][i];
    auto const b = col_.begin() + std::ptrdiff_t(row_begin(i));
    auto const e = col_.begin() + std::ptrdiff_t(row_end(i));
    auto const it = std::lower_bound(b, e, std::uint32_t(j));
    if (it == e || *it != j)
        return p_.zero();
    return value(std::uint64_t(it - col_.begin()));
}

void SparseMatrix::validate() const
{
    if (rows_filled() != nrows_)
        throw invariant("row count does not match the declared number of rows");
    if (row_ptr_.front() != 0 || row_ptr_.back() != col_.size())
        throw invariant("row offsets do not cover the entries");
    for (std::uint64_t i = 0; i < nrows_; ++i) {
        if (row_ptr_[i + 1] < row_ptr_[i])
            throw invariant("row offsets are not monotone");
        for (std::uint64_t k = row_ptr_[i]; k < row_ptr_[i + 1]; ++k) {
            if (col_[k] >= sparse_ncols())
                throw invariant("column index outside the sparse range");
            if (k > row_ptr_[i] && col_[k] <= col_[k - 1])
                throw invariant("columns not strictly increasing");
            if (tag_[k] > 3)
                throw invariant("unknown coefficient class");
            if (p_.is_zero(value(k)))
                throw invariant("zero coefficient");
        }
    }
    for (auto const & d : dense_) {
        if (d.size() != nrows_)
            throw invariant("dense column length mismatch");
        for (auto const & v : d)
            if (!p_.is_canonical(v))
                throw invariant("non-canonical dense value");
    }
}

bool SparseMatrix::operator==(SparseMatrix const & o) const
{
    if (!(p_ == o.p_) || nrows_ != o.nrows_ || ncols_ != o.ncols_ || row_ptr_ != o.row_ptr_ ||
        col_ != o.col_ || tag_ != o.tag_ || dense_ != o.dense_)
        return false;
    for (std::size_t k = 0; k < tag_.size(); ++k)
        if (!(coefficient(k) == o.coefficient(k)))
            return false;
    return true;
}

SparseMatrix identity_matrix(PrimeModulus const & p, std::uint64_t n)
{
    SparseMatrix a(p, n, n);
    for (std::uint64_t i = 0; i < n; ++i) {
        Entry const e{std::uint32_t(i), Coefficient::plus_one()};
        a.append_row(std::span(&e, 1));
    }
    return a;
}

SpmvKernel::SpmvKernel(SparseMatrix const & a)
    : a_(&a),
      ctx_(a.modulus(), std::max<std::uint64_t>(a.max_row_weight(), 1), a.max_small_magnitude(),
           a.has_full_values()),
      k_(ctx_.size())
{
    if (a.rows_filled() != a.nrows())
        throw InvalidArgument("matrix is incomplete");
    auto const & pool = a.full_pool();
    pool_rns_.resize(pool.size() * k_);
    std::vector<std::uint64_t> scratch(pool.size() * k_);
    ctx_.to_rns_bulk(pool, pool_rns_, scratch);
    dense_rns_.resize(a.dense_count() * a.nrows() * k_);
    for (std::size_t d = 0; d < a.dense_count(); ++d) {
        std::vector<std::uint64_t> tmp(a.nrows() * k_);
        ctx_.to_rns_bulk(a.dense(d), std::span(dense_rns_.data() + d * a.nrows() * k_, a.nrows() * k_),
                         tmp);
    }
    in_.resize(a.ncols() * k_);
    neg_.resize(a.ncols() * k_);
}

Vector SpmvKernel::apply(std::span<Residue const> u)
{
    Vector v(a_->nrows());
    apply(u, v);
    return v;
}

void SpmvKernel::apply(std::span<Residue const> u, std::span<Residue> v)
{
    SparseMatrix const & a = *a_;
    if (u.size() != a.ncols() || v.size() != a.nrows())
        throw DimensionMismatch("SpMV operand sizes do not match the matrix");
    std::size_t const k = k_;
    ctx_.to_rns_bulk(u, in_, neg_);
    auto const moduli = ctx_.moduli();
    auto const & ptr = a.row_ptr();
    auto const & cols = a.col_idx();
    auto const & tags = a.tags();
    std::uint64_t const sparse_ncols = a.sparse_ncols();
    std::vector<unsigned __int128> acc(k);
    std::vector<std::uint64_t> limbs(k);
    std::uint64_t const * const in = in_.data();
    std::uint64_t const * const neg = neg_.data();

    for (std::uint64_t i = 0; i < a.nrows(); ++i) {
        std::fill(acc.begin(), acc.end(), 0);
        for (std::uint64_t e = ptr[i]; e < ptr[i + 1]; ++e) {
            std::size_t const base = std::size_t(cols[e]) * k;
            switch (tags[e]) {
            case 0:
                for (std::size_t l = 0; l < k; ++l)
                    acc[l] += in[base + l];
                break;
            case 1:
                for (std::size_t l = 0; l < k; ++l)
                    acc[l] += neg[base + l];
                break;
            case 2: {
                std::int64_t const s = a.payload(e);
                if (s > 0) {
                    for (std::size_t l = 0; l < k; ++l)
                        acc[l] += (unsigned __int128)std::uint64_t(s) * in[base + l];
                } else {
                    for (std::size_t l = 0; l < k; ++l)
                        acc[l] += (unsigned __int128)std::uint64_t(-s) * neg[base + l];
                }
                break;
            }
            default: {
                std::uint64_t const * c = pool_rns_.data() + std::size_t(a.payload(e)) * k;
                for (std::size_t l = 0; l < k; ++l)
                    acc[l] += mulmod_u64(c[l], in[base + l], moduli[l]);
                break;
            }
            }
        }
        for (std::size_t d = 0; d < a.dense_count(); ++d) {
            std::uint64_t const * c = dense_rns_.data() + (d * a.nrows() + i) * k;
            std::size_t const base = std::size_t(sparse_ncols + d) * k;
            for (std::size_t l = 0; l < k; ++l)
                acc[l] += mulmod_u64(c[l], in[base + l], moduli[l]);
        }
        for (std::size_t l = 0; l < k; ++l)
            limbs[l] = reduce128(acc[l], moduli[l]);
        v[i] = ctx_.reconstruct(limbs.data());
    }
}

Vector spmv_sequential(SparseMatrix const & a, std::span<Residue const> u)
{
    SpmvKernel kernel(a);
    return kernel.apply(u);
}

MatrixStats matrix_stats(SparseMatrix const & a)
{
    MatrixStats s;
    s.nrows = a.nrows();
    s.ncols = a.ncols();
    s.nnz = a.nnz();
    auto const rw = a.row_weights();
    if (s.nrows > 0) {
        s.avg_row_weight = double(s.nnz) / double(s.nrows);
        double var = 0;
        for (auto w : rw) {
            double const d = double(w) - s.avg_row_weight;
            var += d * d;
        }
        s.row_weight_stddev = std::sqrt(var / double(s.nrows));
    }
    for (auto w : a.column_weights()) {
        std::size_t const b = w == 0 ? 0 : std::size_t(64 - __builtin_clzll(w));
        if (s.column_weight_histogram.size() <= b)
            s.column_weight_histogram.resize(b + 1, 0);
        ++s.column_weight_histogram[b];
    }
    std::uint64_t pm1 = 0;
    for (auto t : a.tags())
        pm1 += t <= 1;
    PrimeModulus const & p = a.modulus();
    for (std::size_t d = 0; d < a.dense_count(); ++d)
        for (auto const & v : a.dense(d))
            pm1 += p.is_one(v) || p.is_minus_one(v);
    if (s.nnz > 0)
        s.pm1_fraction = double(pm1) / double(s.nnz);
    return s;
}

Vector random_vector(PrimeModulus const & p, std::size_t n, Rng & rng)
{
    Vector v(n);
    for (auto & x : v)
        x = p.random(rng);
    return v;
}

bool is_zero_vector(PrimeModulus const & p, std::span<Residue const> v)
{
    return std::all_of(v.begin(), v.end(), [&](Residue const & x) { return p.is_zero(x); });
}

} // namespace sldlag
