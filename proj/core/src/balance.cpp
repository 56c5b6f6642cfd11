#include "sldlag/balance.hpp"

#include <algorithm>
#include <charconv>
#include <numeric>

#include "sldlag/binio.hpp"
#include "sldlag/errors.hpp"

namespace sldlag {

namespace {

/* Deals the indices, heaviest first, over `groups` groups of `group_size`
 * slots; the first n slots overall are the real ones. */
std::vector<std::uint64_t> serpentine(std::vector<std::uint64_t> const & weight, std::uint64_t groups,
                                      std::uint64_t n_padded)
{
    std::uint64_t const n = weight.size();
    std::uint64_t const group_size = n_padded / groups;
    std::vector<std::uint64_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::uint64_t a, std::uint64_t b) { return weight[a] > weight[b]; });
    std::vector<std::uint64_t> capacity(groups);
    for (std::uint64_t g = 0; g < groups; ++g) {
        std::uint64_t const lo = g * group_size, hi = lo + group_size;
        capacity[g] = hi <= n ? group_size : (lo >= n ? 0 : n - lo);
    }
    std::vector<std::vector<std::uint64_t>> members(groups);
    std::uint64_t pos = 0; // position in the serpentine sweep
    for (auto idx : order) {
        for (;;) {
            std::uint64_t const t = pos % (2 * groups);
            std::uint64_t const g = t < groups ? t : 2 * groups - 1 - t;
            ++pos;
            if (members[g].size() < capacity[g]) {
                members[g].push_back(idx);
                break;
            }
        }
    }
    std::vector<std::uint64_t> perm(n_padded);
    for (std::uint64_t g = 0; g < groups; ++g) {
        auto & m = members[g];
        std::sort(m.begin(), m.end());
        for (std::size_t k = 0; k < m.size(); ++k)
            perm[m[k]] = g * group_size + k;
    }
    for (std::uint64_t i = n; i < n_padded; ++i)
        perm[i] = i;
    return perm;
}

void require_square(SparseMatrix const & a)
{
    if (a.nrows() != a.ncols())
        throw DimensionMismatch("balancing needs a square matrix");
}

} // namespace

GridSpec GridSpec::parse(std::string_view s)
{
    auto const x = s.find_first_of("xX");
    GridSpec g;
    auto parse_dim = [&](std::string_view t, std::uint32_t & out) {
        auto const res = std::from_chars(t.data(), t.data() + t.size(), out);
        if (res.ec != std::errc() || res.ptr != t.data() + t.size() || out == 0)
            throw InvalidArgument("bad grid specification: " + std::string(s));
    };
    if (x == std::string_view::npos)
        throw InvalidArgument("bad grid specification: " + std::string(s));
    parse_dim(s.substr(0, x), g.r);
    parse_dim(s.substr(x + 1), g.c);
    return g;
}

std::string GridSpec::str() const { return std::to_string(r) + "x" + std::to_string(c); }

std::uint64_t GridSpec::fragments() const { return std::lcm<std::uint64_t>(r, c); }

std::uint64_t padded_size(std::uint64_t n, GridSpec const & g)
{
    std::uint64_t const l = g.fragments();
    return (n + l - 1) / l * l;
}

bool is_permutation(std::vector<std::uint64_t> const & p)
{
    std::vector<bool> seen(p.size(), false);
    for (auto x : p) {
        if (x >= p.size() || seen[x])
            return false;
        seen[x] = true;
    }
    return true;
}

PermutationPair balance_permutation(SparseMatrix const & a, GridSpec const & g)
{
    require_square(a);
    PermutationPair pp;
    pp.n_padded = padded_size(a.nrows(), g);
    pp.col_perm = serpentine(a.column_weights(), g.c, pp.n_padded);
    pp.row_perm = serpentine(a.row_weights(), g.r, pp.n_padded);
    return pp;
}

PermutationPair identity_permutation(SparseMatrix const & a, GridSpec const & g)
{
    require_square(a);
    PermutationPair pp;
    pp.n_padded = padded_size(a.nrows(), g);
    pp.row_perm.resize(pp.n_padded);
    std::iota(pp.row_perm.begin(), pp.row_perm.end(), 0);
    pp.col_perm = pp.row_perm;
    return pp;
}

SparseMatrix permute_pad(SparseMatrix const & a, PermutationPair const & pp)
{
    require_square(a);
    std::uint64_t const n = a.nrows(), np = pp.n_padded;
    if (pp.row_perm.size() != np || pp.col_perm.size() != np || np < n)
        throw DimensionMismatch("permutation does not fit the matrix");
    SparseMatrix const m = a.dense_count() ? a.materialized() : SparseMatrix();
    SparseMatrix const & src = a.dense_count() ? m : a;
    std::vector<std::uint64_t> inv_row(np);
    for (std::uint64_t i = 0; i < np; ++i)
        inv_row[pp.row_perm[i]] = i;
    SparseMatrix b(a.modulus(), np, np);
    std::vector<Entry> row;
    for (std::uint64_t ni = 0; ni < np; ++ni) {
        std::uint64_t const i = inv_row[ni];
        row.clear();
        if (i < n) {
            for (auto k = src.row_begin(i); k < src.row_end(i); ++k)
                row.push_back({std::uint32_t(pp.col_perm[src.col(k)]), src.coefficient(k)});
        } else {
            row.push_back({std::uint32_t(pp.col_perm[i]), Coefficient::plus_one()});
        }
        std::sort(row.begin(), row.end(), [](Entry const & x, Entry const & y) { return x.col < y.col; });
        b.append_row(row);
    }
    return b;
}

BlockSplit split(SparseMatrix const & a, PermutationPair const & pp, GridSpec const & g)
{
    SparseMatrix const b = permute_pad(a, pp);
    BlockSplit bs;
    bs.grid = g;
    bs.n = a.nrows();
    bs.n_padded = pp.n_padded;
    bs.block_rows = bs.n_padded / g.r;
    bs.block_cols = bs.n_padded / g.c;
    bs.pad_rows = bs.pad_cols = bs.n_padded - bs.n;
    for (std::uint64_t i = bs.n; i < bs.n_padded; ++i)
        bs.pin_rows.push_back({pp.row_perm[i], pp.col_perm[i]});
    bs.blocks.reserve(g.nodes());
    for (std::uint32_t bi = 0; bi < g.r; ++bi)
        for (std::uint32_t bj = 0; bj < g.c; ++bj)
            bs.blocks.emplace_back(a.modulus(), bs.block_rows, bs.block_cols);
    std::vector<std::vector<Entry>> parts(g.c);
    for (std::uint64_t i = 0; i < bs.n_padded; ++i) {
        for (auto & p : parts)
            p.clear();
        for (auto k = b.row_begin(i); k < b.row_end(i); ++k) {
            std::uint64_t const j = b.col(k);
            parts[j / bs.block_cols].push_back({std::uint32_t(j % bs.block_cols), b.coefficient(k)});
        }
        std::uint64_t const bi = i / bs.block_rows;
        for (std::uint32_t bj = 0; bj < g.c; ++bj)
            bs.blocks[bi * g.c + bj].append_row(parts[bj]);
    }
    return bs;
}

SparseMatrix assemble(BlockSplit const & bs)
{
    SparseMatrix const & first = bs.blocks.front();
    SparseMatrix out(first.modulus(), bs.n_padded, bs.n_padded);
    std::vector<Entry> row;
    for (std::uint64_t i = 0; i < bs.n_padded; ++i) {
        row.clear();
        std::uint64_t const bi = i / bs.block_rows, li = i % bs.block_rows;
        for (std::uint32_t bj = 0; bj < bs.grid.c; ++bj) {
            SparseMatrix const & blk = bs.block(std::uint32_t(bi), bj);
            for (auto k = blk.row_begin(li); k < blk.row_end(li); ++k)
                row.push_back({std::uint32_t(bj * bs.block_cols + blk.col(k)), blk.coefficient(k)});
        }
        out.append_row(row);
    }
    return out;
}

double imbalance(BlockSplit const & bs)
{
    std::vector<std::uint64_t> nnz;
    for (auto const & b : bs.blocks)
        nnz.push_back(b.nnz());
    std::uint64_t const total = std::accumulate(nnz.begin(), nnz.end(), std::uint64_t(0));
    if (total == 0)
        throw InvalidArgument("imbalance of an all-empty split is undefined");
    double const mean = double(total) / double(nnz.size());
    return double(*std::max_element(nnz.begin(), nnz.end())) / mean;
}

double imbalance(SparseMatrix const & a, PermutationPair const & pp, GridSpec const & g)
{
    require_square(a);
    std::uint64_t const br = pp.n_padded / g.r, bc = pp.n_padded / g.c;
    std::vector<std::uint64_t> nnz(g.nodes(), 0);
    for (std::uint64_t i = 0; i < a.nrows(); ++i) {
        std::uint64_t const bi = pp.row_perm[i] / br;
        for (auto k = a.row_begin(i); k < a.row_end(i); ++k)
            ++nnz[bi * g.c + pp.col_perm[a.col(k)] / bc];
        for (std::size_t d = 0; d < a.dense_count(); ++d)
            if (!a.modulus().is_zero(a.dense(d)[i]))
                ++nnz[bi * g.c + pp.col_perm[a.sparse_ncols() + d] / bc];
    }
    for (std::uint64_t i = a.nrows(); i < pp.n_padded; ++i)
        ++nnz[(pp.row_perm[i] / br) * g.c + pp.col_perm[i] / bc];
    std::uint64_t const total = std::accumulate(nnz.begin(), nnz.end(), std::uint64_t(0));
    if (total == 0)
        throw InvalidArgument("imbalance of an all-empty split is undefined");
    return double(*std::max_element(nnz.begin(), nnz.end())) / (double(total) / double(nnz.size()));
}

std::vector<std::uint8_t> encode_permutation(PermutationPair const & pp)
{
    ByteWriter w;
    w.magic("SLDP");
    w.u32(1);
    w.u64(pp.n_padded);
    for (auto x : pp.row_perm)
        w.u64(x);
    for (auto x : pp.col_perm)
        w.u64(x);
    return w.take();
}

PermutationPair decode_permutation(std::span<std::uint8_t const> data)
{
    ByteReader r(data, "SLDP");
    r.expect_magic("SLDP");
    r.expect_version(1);
    PermutationPair pp;
    pp.n_padded = r.u64();
    if (pp.n_padded > r.remaining() / 16)
        r.fail(FormatError::Kind::Truncated, "permutation length exceeds the file size");
    pp.row_perm.resize(pp.n_padded);
    pp.col_perm.resize(pp.n_padded);
    for (auto & x : pp.row_perm)
        x = r.u64();
    for (auto & x : pp.col_perm)
        x = r.u64();
    r.expect_end();
    if (!is_permutation(pp.row_perm) || !is_permutation(pp.col_perm))
        r.fail(FormatError::Kind::InvariantViolation, "not a bijection");
    return pp;
}

void store_permutation(PermutationPair const & pp, std::string const & path)
{
    write_file_atomic(path, encode_permutation(pp));
}

PermutationPair load_permutation(std::string const & path)
{
    return decode_permutation(read_file(path));
}

} // namespace sldlag
