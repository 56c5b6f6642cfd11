#include "sldlag/transport.hpp"

#include <cerrno>
#include <condition_variable>
#include <cstring>
#include <deque>
#include <list>
#include <mutex>
#include <string>

#include <fcntl.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include "sldlag/binio.hpp"
#include "sldlag/errors.hpp"

namespace sldlag {

namespace {

std::string node_str(NodeId n) { return "(" + std::to_string(n.i) + "," + std::to_string(n.j) + ")"; }

[[noreturn]] void throw_timeout(NodeId dst, NodeId src)
{
    throw TimeoutError("node " + node_str(dst) + " timed out waiting for " + node_str(src));
}

void check_tag(Message const & m, std::uint64_t iteration)
{
    if (m.iteration != iteration)
        throw ProtocolError("message from " + node_str(m.src) + " to " + node_str(m.dst) +
                            " carries iteration " + std::to_string(m.iteration) + ", expected " +
                            std::to_string(iteration));
}

class ChannelTransport final : public Transport {
  public:
    ChannelTransport(std::uint32_t r, std::uint32_t c, std::chrono::milliseconds timeout)
        : c_(c), timeout_(timeout), boxes_(std::size_t(r) * c)
    {
    }

    void send(Message m) override
    {
        Box & b = box(m.dst);
        {
            std::lock_guard lk(b.mu);
            b.queue.push_back(std::move(m));
        }
        b.cv.notify_all();
    }

    Message receive(NodeId dst, MessageKind kind, NodeId src, std::uint64_t iteration) override
    {
        Box & b = box(dst);
        std::unique_lock lk(b.mu);
        auto const deadline = Clock::now() + timeout_;
        for (;;) {
            for (auto it = b.queue.begin(); it != b.queue.end(); ++it) {
                if (it->kind == kind && it->src == src) {
                    Message m = std::move(*it);
                    b.queue.erase(it);
                    check_tag(m, iteration);
                    return m;
                }
            }
            if (b.cv.wait_until(lk, deadline) == std::cv_status::timeout) {
                bool found = false;
                for (auto const & m : b.queue)
                    found |= m.kind == kind && m.src == src;
                if (!found)
                    throw_timeout(dst, src);
            }
        }
    }

    char const * name() const override { return "channel"; }

  private:
    struct Box {
        std::mutex mu;
        std::condition_variable cv;
        std::deque<Message> queue;
    };
    Box & box(NodeId n) { return boxes_[std::size_t(n.i) * c_ + n.j]; }

    std::uint32_t c_;
    std::chrono::milliseconds timeout_;
    std::vector<Box> boxes_;
};

/* One AF_UNIX stream pair per destination node. Writes are non-blocking
 * and queue in user space when the socket buffer is full; the receiver
 * flushes its own queue while waiting, so a single thread can drive all
 * nodes without deadlocking on buffer space. */
class SocketTransport final : public Transport {
  public:
    SocketTransport(PrimeModulus const & p, std::uint32_t r, std::uint32_t c,
                    std::chrono::milliseconds timeout)
        : p_(p), c_(c), timeout_(timeout), ends_(std::size_t(r) * c)
    {
        for (auto & e : ends_) {
            int fds[2];
            if (::socketpair(AF_UNIX, SOCK_STREAM, 0, fds) != 0)
                throw Error(std::string("socketpair failed: ") + std::strerror(errno));
            e.wfd = fds[0];
            e.rfd = fds[1];
            ::fcntl(e.wfd, F_SETFL, ::fcntl(e.wfd, F_GETFL) | O_NONBLOCK);
            ::fcntl(e.rfd, F_SETFL, ::fcntl(e.rfd, F_GETFL) | O_NONBLOCK);
        }
    }

    ~SocketTransport() override
    {
        for (auto & e : ends_) {
            ::close(e.wfd);
            ::close(e.rfd);
        }
    }

    void send(Message m) override
    {
        End & e = end(m.dst);
        std::vector<std::uint8_t> frame = encode_message(p_, m);
        std::lock_guard lk(e.mu);
        e.out.insert(e.out.end(), frame.begin(), frame.end());
        flush(e);
    }

    Message receive(NodeId dst, MessageKind kind, NodeId src, std::uint64_t iteration) override
    {
        End & e = end(dst);
        auto const deadline = Clock::now() + timeout_;
        for (;;) {
            {
                std::lock_guard lk(e.mu);
                flush(e);
                drain(e, dst);
                for (auto it = e.inbox.begin(); it != e.inbox.end(); ++it) {
                    if (it->kind == kind && it->src == src) {
                        Message m = std::move(*it);
                        e.inbox.erase(it);
                        check_tag(m, iteration);
                        return m;
                    }
                }
            }
            auto const now = Clock::now();
            if (now >= deadline)
                throw_timeout(dst, src);
            auto const left = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - now);
            pollfd pfd{e.rfd, POLLIN, 0};
            /* short slices so queued output of other senders keeps moving */
            ::poll(&pfd, 1, int(std::min<long>(left.count() + 1, 5)));
        }
    }

    char const * name() const override { return "socket"; }

  private:
    struct End {
        int wfd = -1, rfd = -1;
        std::mutex mu;
        std::deque<std::uint8_t> out;
        std::vector<std::uint8_t> in;
        std::list<Message> inbox;
    };
    End & end(NodeId n) { return ends_[std::size_t(n.i) * c_ + n.j]; }

    void flush(End & e)
    {
        std::uint8_t chunk[65536];
        while (!e.out.empty()) {
            std::size_t const n = std::min(e.out.size(), sizeof chunk);
            std::copy_n(e.out.begin(), n, chunk);
            ssize_t const w = ::write(e.wfd, chunk, n);
            if (w < 0) {
                if (errno == EINTR)
                    continue;
                if (errno == EAGAIN || errno == EWOULDBLOCK)
                    return;
                throw Error(std::string("socket write failed: ") + std::strerror(errno));
            }
            e.out.erase(e.out.begin(), e.out.begin() + w);
        }
    }

    void drain(End & e, NodeId self)
    {
        std::uint8_t chunk[65536];
        for (;;) {
            ssize_t const got = ::read(e.rfd, chunk, sizeof chunk);
            if (got < 0) {
                if (errno == EINTR)
                    continue;
                if (errno == EAGAIN || errno == EWOULDBLOCK)
                    break;
                throw Error(std::string("socket read failed: ") + std::strerror(errno));
            }
            if (got == 0)
                break;
            e.in.insert(e.in.end(), chunk, chunk + got);
            /* keep draining as long as the writer side has queued data */
            flush(e);
        }
        std::size_t pos = 0;
        std::size_t const w = p_.byte_width();
        while (e.in.size() - pos >= kMessageHeaderBytes) {
            std::uint64_t len = 0;
            for (int b = 0; b < 8; ++b)
                len |= std::uint64_t(e.in[pos + 17 + b]) << (8 * b);
            std::size_t const total = kMessageHeaderBytes + len * w;
            if (e.in.size() - pos < total)
                break;
            Message m = decode_message(p_, std::span(e.in.data() + pos, total));
            if (!(m.dst == self))
                throw ProtocolError("frame for " + node_str(m.dst) + " arrived at " + node_str(self));
            e.inbox.push_back(std::move(m));
            pos += total;
        }
        e.in.erase(e.in.begin(), e.in.begin() + std::ptrdiff_t(pos));
    }

    PrimeModulus p_;
    std::uint32_t c_;
    std::chrono::milliseconds timeout_;
    std::vector<End> ends_;
};

class FaultyTransport final : public Transport {
  public:
    FaultyTransport(std::unique_ptr<Transport> inner, std::int64_t drop, std::int64_t retag)
        : inner_(std::move(inner)), drop_(drop), retag_(retag)
    {
    }

    void send(Message m) override
    {
        std::int64_t n;
        {
            std::lock_guard lk(mu_);
            n = count_++;
        }
        if (n == drop_)
            return;
        if (n == retag_)
            m.iteration += 1;
        inner_->send(std::move(m));
    }

    Message receive(NodeId dst, MessageKind kind, NodeId src, std::uint64_t iteration) override
    {
        return inner_->receive(dst, kind, src, iteration);
    }

    char const * name() const override { return inner_->name(); }

  private:
    std::unique_ptr<Transport> inner_;
    std::int64_t drop_, retag_;
    std::mutex mu_;
    std::int64_t count_ = 0;
};

} // namespace

std::vector<std::uint8_t> encode_message(PrimeModulus const & p, Message const & m)
{
    ByteWriter w;
    w.u8(std::uint8_t(m.kind));
    w.u16(m.src.i);
    w.u16(m.src.j);
    w.u16(m.dst.i);
    w.u16(m.dst.j);
    w.u64(m.iteration);
    w.u64(m.payload.size());
    for (auto const & x : m.payload)
        w.residue(p, x);
    return w.take();
}

Message decode_message(PrimeModulus const & p, std::span<std::uint8_t const> frame)
{
    ByteReader r(frame, "message");
    Message m;
    std::uint8_t const kind = r.u8();
    if (kind > 1)
        throw ProtocolError("unknown message kind " + std::to_string(kind));
    m.kind = MessageKind(kind);
    m.src.i = r.u16();
    m.src.j = r.u16();
    m.dst.i = r.u16();
    m.dst.j = r.u16();
    m.iteration = r.u64();
    std::uint64_t const n = r.u64();
    if (n > r.remaining() / p.byte_width())
        throw ProtocolError("message payload shorter than announced");
    m.payload.resize(n);
    for (auto & x : m.payload)
        x = r.residue(p);
    if (r.remaining() != 0)
        throw ProtocolError("trailing bytes after message payload");
    return m;
}

std::unique_ptr<Transport> make_channel_transport(std::uint32_t r, std::uint32_t c,
                                                  std::chrono::milliseconds timeout)
{
    return std::make_unique<ChannelTransport>(r, c, timeout);
}

std::unique_ptr<Transport> make_socket_transport(PrimeModulus const & p, std::uint32_t r,
                                                 std::uint32_t c, std::chrono::milliseconds timeout)
{
    return std::make_unique<SocketTransport>(p, r, c, timeout);
}

std::unique_ptr<Transport> make_faulty_transport(std::unique_ptr<Transport> inner,
                                                 std::int64_t drop_index, std::int64_t retag_index)
{
    return std::make_unique<FaultyTransport>(std::move(inner), drop_index, retag_index);
}

} // namespace sldlag
