#include "sldlag/binio.hpp"
#include "sldlag/spmatrix.hpp"

namespace sldlag {

namespace {

constexpr std::uint32_t kVersion = 1;

} // namespace

std::vector<std::uint8_t> encode_matrix(SparseMatrix const & a)
{
    PrimeModulus const & p = a.modulus();
    ByteWriter w;
    w.magic("SLDM");
    w.u32(kVersion);
    w.u64(a.nrows());
    w.u64(a.ncols());
    w.modulus(p);
    w.u32(std::uint32_t(a.dense_count()));
    for (std::size_t d = 0; d < a.dense_count(); ++d)
        w.u64(a.sparse_ncols() + d);
    for (std::size_t d = 0; d < a.dense_count(); ++d)
        for (auto const & v : a.dense(d))
            w.residue(p, v);
    for (std::uint64_t i = 0; i < a.nrows(); ++i) {
        w.u32(std::uint32_t(a.row_weight(i)));
        std::uint64_t prev = 0;
        for (std::uint64_t k = a.row_begin(i); k < a.row_end(i); ++k) {
            w.u64(a.col(k) - prev);
            prev = a.col(k);
            auto const cls = a.cls(k);
            w.u8(std::uint8_t(cls));
            if (cls == CoeffClass::Small)
                w.i32(a.payload(k));
            else if (cls == CoeffClass::Full)
                w.residue(p, a.value(k));
        }
    }
    return w.take();
}

SparseMatrix decode_matrix(std::span<std::uint8_t const> data)
{
    ByteReader r(data, "SLDM");
    r.expect_magic("SLDM");
    r.expect_version(kVersion);
    std::uint64_t const nrows = r.u64();
    std::uint64_t const ncols = r.u64();
    PrimeModulus const p = r.modulus();
    std::uint32_t const dense_count = r.u32();
    if (dense_count > ncols)
        r.fail(FormatError::Kind::InvariantViolation, "more dense columns than columns");
    if (ncols - dense_count > std::uint64_t(UINT32_MAX) + 1)
        r.fail(FormatError::Kind::InvariantViolation, "too many sparse columns");
    /* Every row costs at least four bytes; reject absurd headers before
     * allocating for them. */
    if (nrows > r.remaining() / 4 + 1)
        r.fail(FormatError::Kind::Truncated, "row count exceeds the file size");
    for (std::uint32_t d = 0; d < dense_count; ++d)
        if (r.u64() != ncols - dense_count + d)
            r.fail(FormatError::Kind::InvariantViolation,
                   "dense columns must occupy the highest column indices in order");
    SparseMatrix a(p, nrows, ncols, dense_count);
    for (std::uint32_t d = 0; d < dense_count; ++d) {
        Vector col(nrows);
        for (auto & v : col)
            v = r.residue(p);
        a.set_dense(d, std::move(col));
    }
    std::uint64_t const limit = ncols - dense_count;
    std::vector<Entry> row;
    for (std::uint64_t i = 0; i < nrows; ++i) {
        std::uint32_t const count = r.u32();
        if (count > r.remaining() / 9 + 1)
            r.fail(FormatError::Kind::Truncated, "entry count exceeds the file size");
        row.resize(count);
        std::uint64_t prev = 0;
        for (std::uint32_t t = 0; t < count; ++t) {
            std::uint64_t const delta = r.u64();
            if (t > 0 && delta == 0)
                r.fail(FormatError::Kind::InvariantViolation, "repeated column in a row");
            std::uint64_t const col = prev + delta;
            if (col < prev || col >= limit)
                r.fail(FormatError::Kind::InvariantViolation, "column index out of range");
            prev = col;
            row[t].col = std::uint32_t(col);
            std::uint8_t const tag = r.u8();
            switch (tag) {
            case 0:
                row[t].coeff = Coefficient::plus_one();
                break;
            case 1:
                row[t].coeff = Coefficient::minus_one();
                break;
            case 2: {
                std::int32_t const v = r.i32();
                if (v == 0 || v == INT32_MIN)
                    r.fail(FormatError::Kind::InvariantViolation, "small coefficient out of range");
                row[t].coeff = Coefficient::small_value(v);
                break;
            }
            case 3:
                row[t].coeff = Coefficient::full_value(r.residue(p));
                break;
            default:
                r.fail(FormatError::Kind::InvariantViolation, "unknown coefficient tag");
            }
        }
        try {
            a.append_row(row);
        } catch (InvalidArgument const & e) {
            r.fail(FormatError::Kind::InvariantViolation, e.what());
        }
    }
    r.expect_end();
    return a;
}

void store_matrix(SparseMatrix const & a, std::string const & path)
{
    write_file_atomic(path, encode_matrix(a));
}

SparseMatrix load_matrix(std::string const & path)
{
    return decode_matrix(read_file(path));
}

std::vector<std::uint8_t> encode_vector(PrimeModulus const & p, std::span<Residue const> v)
{
    ByteWriter w;
    w.magic("SLDV");
    w.u32(kVersion);
    w.modulus(p);
    w.u64(v.size());
    for (auto const & x : v)
        w.residue(p, x);
    return w.take();
}

Vector decode_vector(std::span<std::uint8_t const> data, PrimeModulus & p)
{
    ByteReader r(data, "SLDV");
    r.expect_magic("SLDV");
    r.expect_version(kVersion);
    p = r.modulus();
    std::uint64_t const n = r.u64();
    if (n > r.remaining() / p.byte_width())
        r.fail(FormatError::Kind::Truncated, "vector length exceeds the file size");
    Vector v(n);
    for (auto & x : v)
        x = r.residue(p);
    r.expect_end();
    return v;
}

void store_vector(PrimeModulus const & p, std::span<Residue const> v, std::string const & path)
{
    write_file_atomic(path, encode_vector(p, v));
}

Vector load_vector(std::string const & path, PrimeModulus & p)
{
    return decode_vector(read_file(path), p);
}

} // namespace sldlag
