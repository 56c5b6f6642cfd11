#include "sldlag/gridmv.hpp"

#include <algorithm>
#include <chrono>

#include "sldlag/errors.hpp"
#include "sldlag/parallel.hpp"

namespace sldlag {

namespace {

struct Range {
    std::uint64_t lo = 0, hi = 0;
    bool empty() const { return lo >= hi; }
    std::uint64_t size() const { return empty() ? 0 : hi - lo; }
};

Range intersect(Range a, Range b) { return {std::max(a.lo, b.lo), std::min(a.hi, b.hi)}; }

Range row_block(std::uint64_t br, std::uint32_t i) { return {i * br, (i + 1) * br}; }
Range col_block(std::uint64_t bc, std::uint32_t j) { return {j * bc, (j + 1) * bc}; }

} // namespace

TransportKind parse_transport(std::string const & s)
{
    if (s == "channel")
        return TransportKind::Channel;
    if (s == "socket")
        return TransportKind::Socket;
    throw InvalidArgument("unknown transport '" + s + "' (expected channel or socket)");
}

char const * transport_name(TransportKind k) { return k == TransportKind::Channel ? "channel" : "socket"; }

std::uint64_t CommLog::total_bytes() const
{
    std::uint64_t s = 0;
    for (auto const & e : entries)
        s += e.bytes;
    return s;
}

std::uint64_t CommLog::total_messages() const
{
    std::uint64_t s = 0;
    for (auto const & e : entries)
        s += e.messages;
    return s;
}

void CommLog::append(CommLog const & other) { entries.insert(entries.end(), other.entries.begin(), other.entries.end()); }

std::uint64_t comm_volume_model(GridSpec const & g, std::uint64_t fragment_bytes)
{
    /* count in fine fragments: row blocks hold L/r of them, column blocks L/c */
    std::uint64_t const L = g.fragments();
    std::uint64_t const br = L / g.r, bc = L / g.c;
    std::uint64_t frags = std::uint64_t(g.r) * (g.c - 1) * br;
    for (std::uint32_t i = 0; i < g.r; ++i) {
        std::uint64_t const own = intersect(row_block(br, i), col_block(bc, collector_column(g, i))).size();
        frags += g.r * br - own;
    }
    return frags * fragment_bytes;
}

std::uint64_t comm_messages_model(GridSpec const & g)
{
    std::uint64_t const L = g.fragments();
    std::uint64_t const br = L / g.r, bc = L / g.c;
    std::uint64_t msgs = std::uint64_t(g.r) * (g.c - 1);
    for (std::uint32_t i = 0; i < g.r; ++i)
        for (std::uint32_t j = 0; j < g.c; ++j)
            if (!intersect(row_block(br, i), col_block(bc, j)).empty())
                msgs += g.r - (j == collector_column(g, i) ? 1 : 0);
    return msgs;
}

GridEngine::GridEngine(BlockSplit split, GridOptions opts)
    : split_(std::move(split)), opts_(opts)
{
    GridSpec const & g = split_.grid;
    if (split_.blocks.size() != std::size_t(g.r) * g.c)
        throw DimensionMismatch("block split does not match its grid");
    p_ = split_.blocks.front().modulus();
    contexts_ = opts_.contexts ? opts_.contexts : contexts_from_env();

    if (opts_.transport == TransportKind::Channel)
        transport_ = make_channel_transport(g.r, g.c, opts_.timeout);
    else
        transport_ = make_socket_transport(p_, g.r, g.c, opts_.timeout);
    if (opts_.drop_message >= 0 || opts_.retag_message >= 0)
        transport_ = make_faulty_transport(std::move(transport_), opts_.drop_message, opts_.retag_message);

    workers_.resize(split_.blocks.size());
    for (std::uint32_t i = 0; i < g.r; ++i) {
        for (std::uint32_t j = 0; j < g.c; ++j) {
            WorkerState & w = node(i, j);
            w.coords = {std::uint16_t(i), std::uint16_t(j)};
            w.block = &split_.block(i, j);
            if (w.block->nrows() != split_.block_rows || w.block->ncols() != split_.block_cols)
                throw DimensionMismatch("block dimensions do not match the split");
            w.kernel = std::make_unique<SpmvKernel>(*w.block);
            w.in_fragment.assign(split_.block_cols, Residue{});
            w.out_fragment.assign(split_.block_cols, Residue{});
            w.scratch.assign(split_.block_rows, Residue{});
            if (collector_column(g, i) == j)
                w.reduced.assign(split_.block_rows, Residue{});
        }
    }
}

GridEngine::~GridEngine() = default;

WorkerState const & GridEngine::worker(std::uint32_t i, std::uint32_t j) const
{
    if (i >= split_.grid.r || j >= split_.grid.c)
        throw InvalidArgument("node outside the grid");
    return workers_[i * split_.grid.c + j];
}

void GridEngine::load(std::span<Residue const> u)
{
    if (u.size() != split_.n_padded)
        throw DimensionMismatch("input vector length " + std::to_string(u.size()) + " != " +
                                std::to_string(split_.n_padded));
    if (next_phase_ != GridPhase::Compute)
        throw InvalidArgument("cannot load in the middle of an iteration");
    std::uint64_t const bc = split_.block_cols;
    for (auto & w : workers_) {
        auto const src = u.subspan(w.coords.j * bc, bc);
        std::copy(src.begin(), src.end(), w.in_fragment.begin());
        std::copy(src.begin(), src.end(), w.out_fragment.begin());
    }
}

Vector GridEngine::assemble() const
{
    Vector out;
    out.reserve(split_.n_padded);
    for (std::uint32_t j = 0; j < split_.grid.c; ++j) {
        auto const & f = workers_[j].in_fragment;
        out.insert(out.end(), f.begin(), f.end());
    }
    return out;
}

void GridEngine::phase_compute()
{
    parallel_for(workers_.size(), contexts_, [&](std::size_t t) {
        WorkerState & w = workers_[t];
        w.kernel->apply(w.in_fragment, w.scratch);
    });
}

void GridEngine::phase_reduce()
{
    GridSpec const & g = split_.grid;
    std::uint64_t const width = p_.byte_width();

    /* sends first, then receives: a node never waits on a send that is
     * scheduled after it */
    for (auto & w : workers_) {
        std::uint32_t const kc = collector_column(g, w.coords.i);
        if (w.coords.j == kc)
            continue;
        Message m{MessageKind::PartialSum, w.coords, NodeId{w.coords.i, std::uint16_t(kc)}, iteration_, w.scratch};
        current_.reduce_messages += 1;
        current_.reduce_bytes += m.payload.size() * width;
        transport_->send(std::move(m));
    }

    parallel_for(g.r, contexts_, [&](std::size_t i) {
        std::uint32_t const kc = collector_column(g, std::uint32_t(i));
        WorkerState & col = node(std::uint32_t(i), kc);
        /* sum in source column order */
        Vector & acc = col.reduced;
        bool first = true;
        for (std::uint32_t j = 0; j < g.c; ++j) {
            Vector partial_storage;
            Vector const * partial;
            if (j == kc) {
                partial = &col.scratch;
            } else {
                Message m = transport_->receive(col.coords, MessageKind::PartialSum,
                                                NodeId{std::uint16_t(i), std::uint16_t(j)}, iteration_);
                if (m.payload.size() != split_.block_rows)
                    throw ProtocolError("partial sum has wrong length");
                partial_storage = std::move(m.payload);
                partial = &partial_storage;
            }
            if (first) {
                std::copy(partial->begin(), partial->end(), acc.begin());
                first = false;
            } else {
                for (std::size_t t = 0; t < acc.size(); ++t)
                    acc[t] = p_.add(acc[t], (*partial)[t]);
            }
        }
    });
}

void GridEngine::phase_broadcast()
{
    GridSpec const & g = split_.grid;
    std::uint64_t const br = split_.block_rows, bc = split_.block_cols;
    std::uint64_t const width = p_.byte_width();

    for (std::uint32_t i = 0; i < g.r; ++i) {
        WorkerState & col = node(i, collector_column(g, i));
        Range const rb = row_block(br, i);
        for (std::uint32_t j = 0; j < g.c; ++j) {
            Range const seg = intersect(rb, col_block(bc, j));
            if (seg.empty())
                continue;
            for (std::uint32_t i2 = 0; i2 < g.r; ++i2) {
                NodeId const dst{std::uint16_t(i2), std::uint16_t(j)};
                if (dst == col.coords)
                    continue;
                Message m{MessageKind::Fragment, col.coords, dst, iteration_,
                          Vector(col.reduced.begin() + (seg.lo - rb.lo), col.reduced.begin() + (seg.hi - rb.lo))};
                current_.broadcast_messages += 1;
                current_.broadcast_bytes += m.payload.size() * width;
                transport_->send(std::move(m));
            }
        }
    }

    parallel_for(workers_.size(), contexts_, [&](std::size_t t) {
        WorkerState & w = workers_[t];
        Range const cb = col_block(bc, w.coords.j);
        for (std::uint32_t i = 0; i < g.r; ++i) {
            Range const seg = intersect(row_block(br, i), cb);
            if (seg.empty())
                continue;
            NodeId const src{std::uint16_t(i), std::uint16_t(collector_column(g, i))};
            auto const out = w.out_fragment.begin() + (seg.lo - cb.lo);
            if (src == w.coords) {
                auto const from = w.reduced.begin() + (seg.lo - i * br);
                std::copy(from, from + seg.size(), out);
            } else {
                Message m = transport_->receive(w.coords, MessageKind::Fragment, src, iteration_);
                if (m.payload.size() != seg.size())
                    throw ProtocolError("fragment has wrong length");
                std::copy(m.payload.begin(), m.payload.end(), out);
            }
        }
        w.in_fragment = w.out_fragment;
        w.iteration = iteration_ + 1;
    });
}

void GridEngine::run_phase(GridPhase phase)
{
    if (phase != next_phase_)
        throw InvalidArgument("grid phases must run in order compute, reduce, broadcast");
    auto const t0 = std::chrono::steady_clock::now();
    auto elapsed = [&] { return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count(); };
    switch (phase) {
    case GridPhase::Compute:
        current_ = CommLogEntry{};
        current_.iteration = iteration_;
        phase_compute();
        current_.compute_seconds = elapsed();
        next_phase_ = GridPhase::Reduce;
        break;
    case GridPhase::Reduce:
        phase_reduce();
        current_.comm_seconds += elapsed();
        next_phase_ = GridPhase::Broadcast;
        break;
    case GridPhase::Broadcast:
        phase_broadcast();
        current_.comm_seconds += elapsed();
        current_.messages = current_.reduce_messages + current_.broadcast_messages;
        current_.bytes = current_.reduce_bytes + current_.broadcast_bytes;
        log_.entries.push_back(current_);
        ++iteration_;
        next_phase_ = GridPhase::Compute;
        break;
    }
}

void GridEngine::iterate()
{
    run_phase(GridPhase::Compute);
    run_phase(GridPhase::Reduce);
    run_phase(GridPhase::Broadcast);
}

void GridEngine::run_iterations(std::uint64_t k, Tap const & tap)
{
    for (std::uint64_t t = 0; t < k; ++t) {
        iterate();
        if (tap)
            tap(iteration_, assemble());
    }
}

} // namespace sldlag
