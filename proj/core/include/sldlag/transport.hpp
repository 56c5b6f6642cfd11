#pragma once

/* Point-to-point message passing between grid nodes.
 *
 * A transport delivers Messages addressed to a node; the receiver asks for
 * the next message of a given kind from a given source and checks that it
 * carries the expected iteration tag. Two transports are provided: an
 * in-process channel (per-node mailboxes) and a loopback socket transport
 * that pushes every message through its wire encoding. */

#include <chrono>
#include <cstdint>
#include <memory>
#include <vector>

#include "sldlag/modring.hpp"

namespace sldlag {

struct NodeId {
    std::uint16_t i = 0;
    std::uint16_t j = 0;
    bool operator==(NodeId const &) const = default;
};

enum class MessageKind : std::uint8_t { PartialSum = 0, Fragment = 1 };

struct Message {
    MessageKind kind = MessageKind::PartialSum;
    NodeId src;
    NodeId dst;
    std::uint64_t iteration = 0;
    std::vector<Residue> payload;
};

/* Wire encoding: u8 kind; u16 src_i, src_j, dst_i, dst_j; u64 iteration;
 * u64 payload_len; payload residues little-endian at fixed width. */
std::vector<std::uint8_t> encode_message(PrimeModulus const & p, Message const & m);
Message decode_message(PrimeModulus const & p, std::span<std::uint8_t const> frame);
inline constexpr std::size_t kMessageHeaderBytes = 1 + 4 * 2 + 8 + 8;

class Transport {
  public:
    virtual ~Transport() = default;
    virtual void send(Message m) = 0;
    /* Blocks until a message of `kind` from `src` reaches `dst`. Throws
     * TimeoutError when none arrives in time and ProtocolError when its
     * iteration tag differs from `iteration`. */
    virtual Message receive(NodeId dst, MessageKind kind, NodeId src, std::uint64_t iteration) = 0;
    virtual char const * name() const = 0;
};

using Clock = std::chrono::steady_clock;

std::unique_ptr<Transport> make_channel_transport(std::uint32_t r, std::uint32_t c,
                                                  std::chrono::milliseconds timeout);
std::unique_ptr<Transport> make_socket_transport(PrimeModulus const & p, std::uint32_t r,
                                                 std::uint32_t c, std::chrono::milliseconds timeout);

/* Test harness wrapper: drops the drop_index-th send (counting from 0),
 * or rewrites the iteration tag of the retag_index-th send. Negative
 * indices disable the fault. */
std::unique_ptr<Transport> make_faulty_transport(std::unique_ptr<Transport> inner,
                                                 std::int64_t drop_index, std::int64_t retag_index);

} // namespace sldlag
