#pragma once

/* Distributed SpMV on an r x c grid of nodes.
 *
 * Node (i, j) owns block A_ij of the permuted, padded matrix and the
 * column fragment u_j. One iteration has three phases:
 *   compute    each node forms the partial product A_ij u_j;
 *   reduce     the nodes of row i send their partials to the row's
 *              collector (i, i mod c), which sums them into v_i;
 *   broadcast  each collector sends the parts of v_i to every node whose
 *              column fragment overlaps row block i.
 * Nodes interact only through a Transport; the engine keeps per-node state
 * and drives the phases in lockstep. */

#include <chrono>
#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "sldlag/balance.hpp"
#include "sldlag/spmatrix.hpp"
#include "sldlag/transport.hpp"

namespace sldlag {

enum class TransportKind { Channel, Socket };
TransportKind parse_transport(std::string const & s);
char const * transport_name(TransportKind k);

struct WorkerState {
    NodeId coords;
    SparseMatrix const * block = nullptr;
    std::unique_ptr<SpmvKernel> kernel;
    Vector in_fragment;  // u_j, length n_padded / c
    Vector out_fragment; // new u_j after the last completed iteration
    Vector scratch;      // A_ij u_j, length n_padded / r
    Vector reduced;      // v_i on the row collector, empty elsewhere
    std::uint64_t iteration = 0;
};

struct CommLogEntry {
    std::uint64_t iteration = 0;
    std::uint64_t messages = 0;
    std::uint64_t bytes = 0;
    std::uint64_t reduce_messages = 0;
    std::uint64_t reduce_bytes = 0;
    std::uint64_t broadcast_messages = 0;
    std::uint64_t broadcast_bytes = 0;
    /* wall-clock of the local products and of the two exchange phases */
    double compute_seconds = 0;
    double comm_seconds = 0;
};

struct CommLog {
    std::vector<CommLogEntry> entries;

    std::uint64_t total_bytes() const;
    std::uint64_t total_messages() const;
    void append(CommLog const & other);
};

/* Collector column of row i. */
inline std::uint32_t collector_column(GridSpec const & g, std::uint32_t i) { return i % g.c; }

/* Bytes one full iteration sends, where fragment_bytes is the size of one
 * fine fragment (n_padded / lcm(r, c) residues). On a square grid this is
 * (c - 1) fragments per row for the reduction plus (r - 1) per column for
 * the broadcast. */
std::uint64_t comm_volume_model(GridSpec const & g, std::uint64_t fragment_bytes);
std::uint64_t comm_messages_model(GridSpec const & g);

struct GridOptions {
    TransportKind transport = TransportKind::Channel;
    /* 0 means: take SLDLAG_CONTEXTS */
    unsigned contexts = 0;
    std::chrono::milliseconds timeout{30000};
    /* fault injection for tests, see make_faulty_transport */
    std::int64_t drop_message = -1;
    std::int64_t retag_message = -1;
};

enum class GridPhase { Compute, Reduce, Broadcast };

class GridEngine {
  public:
    GridEngine(BlockSplit split, GridOptions opts = {});
    ~GridEngine();
    GridEngine(GridEngine const &) = delete;
    GridEngine & operator=(GridEngine const &) = delete;

    GridSpec const & grid() const { return split_.grid; }
    PrimeModulus const & modulus() const { return p_; }
    std::uint64_t size() const { return split_.n_padded; }
    std::uint64_t iteration() const { return iteration_; }

    /* Distributes u (length n_padded, permuted coordinates) to the nodes. */
    void load(std::span<Residue const> u);
    /* Concatenation of the current column fragments. */
    Vector assemble() const;

    void iterate();
    using Tap = std::function<void(std::uint64_t iteration, Vector const & assembled)>;
    void run_iterations(std::uint64_t k, Tap const & tap = {});
    /* Single phase, for tracing; phases must be run in order. */
    void run_phase(GridPhase phase);

    WorkerState const & worker(std::uint32_t i, std::uint32_t j) const;
    CommLog const & log() const { return log_; }
    void clear_log() { log_.entries.clear(); }
    char const * transport_name() const { return transport_->name(); }

  private:
    WorkerState & node(std::uint32_t i, std::uint32_t j) { return workers_[i * split_.grid.c + j]; }
    void phase_compute();
    void phase_reduce();
    void phase_broadcast();

    BlockSplit split_;
    PrimeModulus p_;
    GridOptions opts_;
    unsigned contexts_;
    std::unique_ptr<Transport> transport_;
    std::vector<WorkerState> workers_;
    std::uint64_t iteration_ = 0;
    GridPhase next_phase_ = GridPhase::Compute;
    CommLogEntry current_;
    CommLog log_;
};

} // namespace sldlag
