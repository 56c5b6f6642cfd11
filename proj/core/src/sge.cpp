#include "sldlag/sge.hpp"

#include <algorithm>
#include <map>
#include <set>

#include "sldlag/binio.hpp"
#include "sldlag/errors.hpp"

namespace sldlag {

namespace {

/* Compact working entry: a non-zero small value, or an index into the
 * residue pool when small == 0. */
struct WEntry {
    std::uint32_t col;
    std::int32_t small;
    std::uint32_t pool;
};

class Eliminator {
  public:
    Eliminator(SparseMatrix const & a, SgeOptions const & opts)
        : p_(a.modulus()), nrows_(a.nrows()), ncols_(a.ncols())
    {
        SparseMatrix const m = a.dense_count() ? a.materialized() : SparseMatrix();
        SparseMatrix const & src = a.dense_count() ? m : a;
        rows_.resize(nrows_);
        row_alive_.assign(nrows_, true);
        col_alive_.assign(ncols_, true);
        colw_.assign(ncols_, 0);
        col_rows_.resize(ncols_);
        for (std::uint64_t i = 0; i < nrows_; ++i) {
            auto & row = rows_[i];
            row.reserve(src.row_weight(i));
            for (auto k = src.row_begin(i); k < src.row_end(i); ++k) {
                row.push_back(make(src.col(k), src.value(k)));
                ++colw_[src.col(k)];
                col_rows_[src.col(k)].push_back(std::uint32_t(i));
            }
            nnz_ += row.size();
        }
        alive_rows_ = nrows_;
        for (std::uint64_t c = 0; c < ncols_; ++c)
            classify_col(std::uint32_t(c), true);
        max_fill_ = opts.max_fill_row_weight;
        if (max_fill_ == 0)
            max_fill_ = nrows_ ? std::max<std::uint64_t>(1, 4 * nnz_ / nrows_) : 1;
        budget_ = opts.memory_budget_bytes;
    }

    SgeResult run()
    {
        SgeResult res;
        res.cost_trace.push_back(cost());
        for (;;) {
            if (budget_ && nnz_ * kSgeBytesPerEntry <= budget_) {
                res.stop_reason = "memory budget reached";
                break;
            }
            if (!zero_.empty()) {
                std::uint32_t const c = *zero_.begin();
                drop_column(c);
                res.cost_trace.push_back(cost());
                continue;
            }
            if (!one_.empty()) {
                std::uint32_t const c = *one_.begin();
                solve_singleton(rows_of(c).front(), c);
                res.cost_trace.push_back(cost());
                continue;
            }
            if (!two_.empty()) {
                std::string reason;
                if (!combine_lightest(reason)) {
                    res.stop_reason = reason;
                    break;
                }
                res.cost_trace.push_back(cost());
                continue;
            }
            res.stop_reason = "no rule applies";
            break;
        }
        build(res);
        return res;
    }

  private:
    WEntry make(std::uint32_t col, Residue const & v)
    {
        Coefficient const c = classify(p_, v);
        switch (c.cls) {
        case CoeffClass::PlusOne:
            return {col, 1, 0};
        case CoeffClass::MinusOne:
            return {col, -1, 0};
        case CoeffClass::Small:
            return {col, c.small, 0};
        case CoeffClass::Full:
            break;
        }
        pool_.push_back(v);
        return {col, 0, std::uint32_t(pool_.size() - 1)};
    }

    Residue value(WEntry const & e) const { return e.small ? p_.from_i64(e.small) : pool_[e.pool]; }

    unsigned __int128 cost() const { return (unsigned __int128)alive_rows_ * nnz_; }

    void classify_col(std::uint32_t c, bool fresh = false)
    {
        if (!fresh) {
            zero_.erase(c);
            one_.erase(c);
            two_.erase(c);
        }
        if (!col_alive_[c])
            return;
        switch (colw_[c]) {
        case 0:
            zero_.insert(c);
            break;
        case 1:
            one_.insert(c);
            break;
        case 2:
            two_.insert(c);
            break;
        default:
            break;
        }
    }

    void set_weight(std::uint32_t c, std::uint64_t w)
    {
        std::uint64_t const old = colw_[c];
        colw_[c] = w;
        if (std::min<std::uint64_t>(old, 3) != std::min<std::uint64_t>(w, 3))
            classify_col(c);
    }

    WEntry const * find(std::uint64_t r, std::uint32_t c) const
    {
        auto const & row = rows_[r];
        auto it = std::lower_bound(row.begin(), row.end(), c,
                                   [](WEntry const & e, std::uint32_t x) { return e.col < x; });
        return it != row.end() && it->col == c ? &*it : nullptr;
    }

    /* live rows holding column c; prunes stale incidence entries */
    std::vector<std::uint32_t> const & rows_of(std::uint32_t c)
    {
        auto & list = col_rows_[c];
        std::vector<std::uint32_t> kept;
        for (auto r : list)
            if (row_alive_[r] && find(r, c) &&
                std::find(kept.begin(), kept.end(), r) == kept.end())
                kept.push_back(r);
        list = std::move(kept);
        return list;
    }

    void drop_column(std::uint32_t c)
    {
        SgeStep s;
        s.kind = SgeStepKind::DropZeroColumn;
        s.col = c;
        steps_.push_back(std::move(s));
        fixed_zero_.push_back(c);
        col_alive_[c] = false;
        classify_col(c);
    }

    void solve_singleton(std::uint32_t r, std::uint32_t c)
    {
        SgeStep s;
        s.kind = SgeStepKind::SolveSingletonColumn;
        s.row = r;
        s.col = c;
        for (auto const & e : rows_[r]) {
            if (e.col == c)
                s.pivot = value(e);
            else
                s.others.push_back({e.col, value(e)});
        }
        steps_.push_back(std::move(s));
        col_alive_[c] = false;
        classify_col(c);
        for (auto const & e : rows_[r])
            if (e.col != c)
                set_weight(e.col, colw_[e.col] - 1);
        nnz_ -= rows_[r].size();
        rows_[r].clear();
        rows_[r].shrink_to_fit();
        row_alive_[r] = false;
        --alive_rows_;
    }

    bool combine_lightest(std::string & reason)
    {
        /* lightest = smallest combined weight of the two rows */
        std::uint32_t best = 0;
        std::uint64_t best_w = UINT64_MAX;
        std::uint32_t r1 = 0, r2 = 0;
        for (auto c : two_) {
            auto const & rs = rows_of(c);
            std::uint64_t const w = rows_[rs[0]].size() + rows_[rs[1]].size();
            if (w < best_w) {
                best_w = w;
                best = c;
                r1 = rs[0];
                r2 = rs[1];
            }
        }
        std::uint32_t const c = best;
        /* the lighter row is the source, ties go to the lower index */
        auto lighter = [&](std::uint32_t x, std::uint32_t y) {
            return rows_[x].size() != rows_[y].size() ? rows_[x].size() < rows_[y].size() : x < y;
        };
        std::uint32_t const src = lighter(r1, r2) ? r1 : r2;
        std::uint32_t const tgt = src == r1 ? r2 : r1;
        Residue const sc = value(*find(src, c));
        Residue const tc = value(*find(tgt, c));
        Residue const mult = p_.neg(p_.mul(tc, p_.inverse(sc)));

        std::vector<WEntry> merged;
        auto const & T = rows_[tgt];
        auto const & S = rows_[src];
        merged.reserve(T.size() + S.size());
        std::size_t i = 0, j = 0;
        std::vector<std::pair<std::uint32_t, int>> delta; // column weight changes
        while (i < T.size() || j < S.size()) {
            if (j == S.size() || (i < T.size() && T[i].col < S[j].col)) {
                merged.push_back(T[i++]);
            } else if (i == T.size() || S[j].col < T[i].col) {
                merged.push_back(make(S[j].col, p_.mul(mult, value(S[j]))));
                delta.push_back({S[j].col, +1});
                ++j;
            } else {
                Residue const v = p_.add(value(T[i]), p_.mul(mult, value(S[j])));
                if (p_.is_zero(v))
                    delta.push_back({T[i].col, -1});
                else
                    merged.push_back(make(T[i].col, v));
                ++i;
                ++j;
            }
        }
        if (merged.size() > max_fill_) {
            reason = "row fill limit reached";
            return false;
        }
        std::uint64_t const new_nnz = nnz_ - T.size() + merged.size() - S.size();
        if ((unsigned __int128)(alive_rows_ - 1) * new_nnz > cost()) {
            reason = "projected cost would increase";
            return false;
        }
        SgeStep s;
        s.kind = SgeStepKind::CombineRows;
        s.row = tgt;
        s.source = src;
        s.multiplier = mult;
        steps_.push_back(std::move(s));
        nnz_ = nnz_ - T.size() + merged.size();
        rows_[tgt] = std::move(merged);
        for (auto [col, d] : delta) {
            if (d > 0)
                col_rows_[col].push_back(tgt);
            set_weight(col, colw_[col] + std::uint64_t(std::int64_t(d)));
        }
        /* column c now only lives in the source row */
        solve_singleton(src, c);
        return true;
    }

    void build(SgeResult & res)
    {
        SgeTranscript & t = res.transcript;
        t.modulus = p_;
        t.original_nrows = nrows_;
        t.original_ncols = ncols_;
        std::vector<std::uint64_t> newcol(ncols_, UINT64_MAX);
        for (std::uint64_t c = 0; c < ncols_; ++c)
            if (col_alive_[c]) {
                newcol[c] = t.column_map.size();
                t.column_map.push_back(c);
            }
        for (std::uint64_t r = 0; r < nrows_; ++r)
            if (row_alive_[r])
                t.row_map.push_back(r);
        t.steps = std::move(steps_);
        t.fixed_zero_cols = std::move(fixed_zero_);
        SparseMatrix red(p_, t.row_map.size(), t.column_map.size());
        std::vector<Entry> row;
        for (auto r : t.row_map) {
            row.clear();
            for (auto const & e : rows_[r]) {
                Coefficient const cf = e.small == 0    ? Coefficient::full_value(pool_[e.pool])
                                       : e.small == 1  ? Coefficient::plus_one()
                                       : e.small == -1 ? Coefficient::minus_one()
                                                       : Coefficient::small_value(e.small);
                row.push_back({std::uint32_t(newcol[e.col]), cf});
            }
            red.append_row(row);
        }
        res.reduced = std::move(red);
    }

    PrimeModulus p_;
    std::uint64_t nrows_, ncols_;
    std::vector<std::vector<WEntry>> rows_;
    std::vector<Residue> pool_;
    std::vector<bool> row_alive_, col_alive_;
    std::vector<std::uint64_t> colw_;
    std::vector<std::vector<std::uint32_t>> col_rows_;
    std::set<std::uint32_t> zero_, one_, two_;
    std::uint64_t nnz_ = 0;
    std::uint64_t alive_rows_ = 0;
    std::uint64_t max_fill_ = 0;
    std::uint64_t budget_ = 0;
    std::vector<SgeStep> steps_;
    std::vector<std::uint64_t> fixed_zero_;
};

constexpr std::uint32_t kTranscriptVersion = 1;

} // namespace

unsigned __int128 projected_cost(SparseMatrix const & a)
{
    return (unsigned __int128)a.nrows() * a.nnz();
}

SgeResult sge_reduce(SparseMatrix const & a, SgeOptions const & opts)
{
    if (a.rows_filled() != a.nrows())
        throw InvalidArgument("matrix is incomplete");
    Eliminator e(a, opts);
    return e.run();
}

SparseMatrix sge_replay(SparseMatrix const & original, SgeTranscript const & t)
{
    PrimeModulus const & p = original.modulus();
    if (original.nrows() != t.original_nrows || original.ncols() != t.original_ncols)
        throw DimensionMismatch("transcript does not belong to this matrix");
    SparseMatrix const m = original.materialized();
    std::vector<std::map<std::uint64_t, Residue>> rows(m.nrows());
    for (std::uint64_t i = 0; i < m.nrows(); ++i)
        for (auto k = m.row_begin(i); k < m.row_end(i); ++k)
            rows[i][m.col(k)] = m.value(k);
    std::vector<bool> row_alive(m.nrows(), true), col_alive(m.ncols(), true);
    auto bad = [](std::string const & why) { throw InvalidArgument("transcript replay: " + why); };
    for (auto const & s : t.steps) {
        switch (s.kind) {
        case SgeStepKind::DropZeroColumn:
            if (s.col >= m.ncols() || !col_alive[s.col])
                bad("dropped column is not live");
            for (std::uint64_t i = 0; i < m.nrows(); ++i)
                if (row_alive[i] && rows[i].count(s.col))
                    bad("dropped column is not empty");
            col_alive[s.col] = false;
            break;
        case SgeStepKind::SolveSingletonColumn: {
            if (s.row >= m.nrows() || !row_alive[s.row] || s.col >= m.ncols() || !col_alive[s.col])
                bad("singleton step refers to a dead row or column");
            auto const & row = rows[s.row];
            auto it = row.find(s.col);
            if (it == row.end() || !(it->second == s.pivot) || row.size() != s.others.size() + 1)
                bad("singleton row does not match the log");
            for (auto const & [c, v] : s.others) {
                auto o = row.find(c);
                if (o == row.end() || !(o->second == v))
                    bad("singleton row does not match the log");
            }
            for (std::uint64_t i = 0; i < m.nrows(); ++i)
                if (i != s.row && row_alive[i] && rows[i].count(s.col))
                    bad("singleton column has other live entries");
            row_alive[s.row] = false;
            col_alive[s.col] = false;
            rows[s.row].clear();
            break;
        }
        case SgeStepKind::CombineRows: {
            if (s.row >= m.nrows() || s.source >= m.nrows() || !row_alive[s.row] ||
                !row_alive[s.source] || s.row == s.source)
                bad("combine step refers to dead rows");
            auto & tgt = rows[s.row];
            for (auto const & [c, v] : rows[s.source]) {
                Residue const nv = p.add(tgt.count(c) ? tgt[c] : p.zero(), p.mul(s.multiplier, v));
                if (p.is_zero(nv))
                    tgt.erase(c);
                else
                    tgt[c] = nv;
            }
            break;
        }
        }
    }
    std::vector<std::uint64_t> cols, rws;
    for (std::uint64_t c = 0; c < m.ncols(); ++c)
        if (col_alive[c])
            cols.push_back(c);
    for (std::uint64_t r = 0; r < m.nrows(); ++r)
        if (row_alive[r])
            rws.push_back(r);
    if (cols != t.column_map || rws != t.row_map)
        bad("live rows or columns differ from the recorded maps");
    std::vector<std::uint64_t> newcol(m.ncols(), 0);
    for (std::size_t j = 0; j < cols.size(); ++j)
        newcol[cols[j]] = j;
    SparseMatrix red(p, rws.size(), cols.size());
    for (auto r : rws) {
        std::vector<Entry> row;
        for (auto const & [c, v] : rows[r]) {
            if (!col_alive[c])
                bad("live row references a dead column");
            row.push_back({std::uint32_t(newcol[c]), Coefficient::full_value(v)});
        }
        red.append_row(row);
    }
    return red;
}

namespace {

Vector lift_into(SgeTranscript const & t, Vector w)
{
    PrimeModulus const & p = t.modulus;
    for (auto it = t.steps.rbegin(); it != t.steps.rend(); ++it) {
        if (it->kind != SgeStepKind::SolveSingletonColumn)
            continue;
        WideAccumulator acc(p);
        for (auto const & [c, v] : it->others)
            acc.add_product(v, w[c]);
        w[it->col] = p.neg(p.mul(p.inverse(it->pivot), acc.reduce()));
    }
    return w;
}

} // namespace

Vector lift_kernel(SgeTranscript const & t, std::span<Residue const> w_reduced)
{
    if (w_reduced.size() != t.column_map.size())
        throw DimensionMismatch("reduced vector length differs from the reduced column count");
    Vector w(t.original_ncols, Residue{});
    for (std::size_t j = 0; j < w_reduced.size(); ++j)
        w[t.column_map[j]] = w_reduced[j];
    return lift_into(t, std::move(w));
}

Vector lift_free_column(SgeTranscript const & t, std::size_t which)
{
    if (which >= t.fixed_zero_cols.size())
        return {};
    Vector w(t.original_ncols, Residue{});
    w[t.fixed_zero_cols[which]] = t.modulus.one();
    return lift_into(t, std::move(w));
}

std::vector<std::uint8_t> encode_transcript(SgeTranscript const & t)
{
    PrimeModulus const & p = t.modulus;
    ByteWriter w;
    w.magic("SLDT");
    w.u32(kTranscriptVersion);
    w.modulus(p);
    w.u64(t.original_nrows);
    w.u64(t.original_ncols);
    w.u64(t.row_map.size());
    w.u64(t.column_map.size());
    w.u64(t.fixed_zero_cols.size());
    w.u64(t.steps.size());
    for (auto r : t.row_map)
        w.u64(r);
    for (auto c : t.column_map)
        w.u64(c);
    for (auto c : t.fixed_zero_cols)
        w.u64(c);
    for (auto const & s : t.steps) {
        w.u8(std::uint8_t(s.kind));
        switch (s.kind) {
        case SgeStepKind::DropZeroColumn:
            w.u64(s.col);
            break;
        case SgeStepKind::SolveSingletonColumn:
            w.u64(s.row);
            w.u64(s.col);
            w.residue(p, s.pivot);
            w.u32(std::uint32_t(s.others.size()));
            for (auto const & [c, v] : s.others) {
                w.u64(c);
                w.residue(p, v);
            }
            break;
        case SgeStepKind::CombineRows:
            w.u64(s.row);
            w.u64(s.source);
            w.residue(p, s.multiplier);
            break;
        }
    }
    return w.take();
}

SgeTranscript decode_transcript(std::span<std::uint8_t const> data)
{
    ByteReader r(data, "SLDT");
    r.expect_magic("SLDT");
    r.expect_version(kTranscriptVersion);
    SgeTranscript t;
    t.modulus = r.modulus();
    PrimeModulus const & p = t.modulus;
    t.original_nrows = r.u64();
    t.original_ncols = r.u64();
    std::uint64_t const nr = r.u64(), nc = r.u64(), nz = r.u64(), ns = r.u64();
    if (nr > t.original_nrows || nc > t.original_ncols || nz > t.original_ncols ||
        (nr + nc + nz + ns) > r.remaining())
        r.fail(FormatError::Kind::InvariantViolation, "inconsistent counts");
    auto read_indices = [&](std::uint64_t count, std::uint64_t bound, std::vector<std::uint64_t> & out) {
        out.resize(count);
        for (auto & x : out) {
            x = r.u64();
            if (x >= bound)
                r.fail(FormatError::Kind::InvariantViolation, "index out of range");
        }
    };
    read_indices(nr, t.original_nrows, t.row_map);
    read_indices(nc, t.original_ncols, t.column_map);
    read_indices(nz, t.original_ncols, t.fixed_zero_cols);
    t.steps.resize(ns);
    for (auto & s : t.steps) {
        std::uint8_t const tag = r.u8();
        if (tag > 2)
            r.fail(FormatError::Kind::InvariantViolation, "unknown step tag");
        s.kind = SgeStepKind(tag);
        switch (s.kind) {
        case SgeStepKind::DropZeroColumn:
            s.col = r.u64();
            if (s.col >= t.original_ncols)
                r.fail(FormatError::Kind::InvariantViolation, "index out of range");
            break;
        case SgeStepKind::SolveSingletonColumn: {
            s.row = r.u64();
            s.col = r.u64();
            s.pivot = r.residue(p);
            if (s.row >= t.original_nrows || s.col >= t.original_ncols || p.is_zero(s.pivot))
                r.fail(FormatError::Kind::InvariantViolation, "bad singleton step");
            std::uint32_t const n = r.u32();
            if (n > r.remaining() / 8)
                r.fail(FormatError::Kind::Truncated, "step exceeds the file size");
            s.others.resize(n);
            for (auto & [c, v] : s.others) {
                c = r.u64();
                v = r.residue(p);
                if (c >= t.original_ncols)
                    r.fail(FormatError::Kind::InvariantViolation, "index out of range");
            }
            break;
        }
        case SgeStepKind::CombineRows:
            s.row = r.u64();
            s.source = r.u64();
            s.multiplier = r.residue(p);
            if (s.row >= t.original_nrows || s.source >= t.original_nrows || p.is_zero(s.multiplier))
                r.fail(FormatError::Kind::InvariantViolation, "bad combine step");
            break;
        }
    }
    r.expect_end();
    return t;
}

void store_transcript(SgeTranscript const & t, std::string const & path)
{
    write_file_atomic(path, encode_transcript(t));
}

SgeTranscript load_transcript(std::string const & path)
{
    return decode_transcript(read_file(path));
}

} // namespace sldlag
