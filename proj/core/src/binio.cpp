#include "sldlag/binio.hpp"

#include <cerrno>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <iterator>

#include <fcntl.h>
#include <unistd.h>

namespace sldlag {

void ByteWriter::residue(PrimeModulus const & p, Residue const & r)
{
    std::size_t const w = p.byte_width();
    std::size_t const at = buf_.size();
    buf_.resize(at + w);
    p.to_bytes(r, std::span(buf_.data() + at, w));
}

void ByteWriter::modulus(PrimeModulus const & p)
{
    auto const be = p.to_bytes_be();
    u16(std::uint16_t(be.size()));
    bytes(be);
}

std::uint64_t ByteReader::get_le(int n)
{
    if (remaining() < std::size_t(n))
        fail(FormatError::Kind::Truncated, "unexpected end of data");
    std::uint64_t v = 0;
    for (int i = 0; i < n; ++i)
        v |= std::uint64_t(data_[pos_ + i]) << (8 * i);
    pos_ += n;
    return v;
}

std::span<std::uint8_t const> ByteReader::bytes(std::size_t n)
{
    if (remaining() < n)
        fail(FormatError::Kind::Truncated, "unexpected end of data");
    auto const s = data_.subspan(pos_, n);
    pos_ += n;
    return s;
}

void ByteReader::expect_magic(std::string_view m)
{
    if (remaining() < m.size())
        fail(remaining() == 0 ? FormatError::Kind::Truncated : FormatError::Kind::BadMagic,
             "missing magic");
    if (std::memcmp(data_.data() + pos_, m.data(), m.size()) != 0)
        fail(FormatError::Kind::BadMagic, "bad magic, expected " + std::string(m));
    pos_ += m.size();
}

void ByteReader::expect_version(std::uint32_t v)
{
    std::uint32_t const got = u32();
    if (got != v)
        fail(FormatError::Kind::BadVersion, "unsupported version " + std::to_string(got));
}

Residue ByteReader::residue(PrimeModulus const & p)
{
    auto const b = bytes(p.byte_width());
    try {
        return p.from_bytes(b);
    } catch (InvalidArgument const &) {
        fail(FormatError::Kind::InvariantViolation, "non-canonical residue");
    }
}

PrimeModulus ByteReader::modulus()
{
    std::uint16_t const n = u16();
    auto const b = bytes(n);
    if (n == 0 || b[0] == 0)
        fail(FormatError::Kind::InvariantViolation, "modulus encoding is not minimal");
    try {
        return PrimeModulus::from_bytes_be(b);
    } catch (InvalidArgument const & e) {
        fail(FormatError::Kind::InvariantViolation, e.what());
    }
}

void ByteReader::expect_end()
{
    if (remaining() != 0)
        fail(FormatError::Kind::InvariantViolation, "trailing bytes after payload");
}

void ByteReader::fail(FormatError::Kind kind, std::string const & msg) const
{
    throw FormatError(kind, what_ + ": " + msg);
}

std::uint64_t fnv1a64(std::span<std::uint8_t const> data)
{
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (auto b : data) {
        h ^= b;
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::vector<std::uint8_t> read_file(std::string const & path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw FormatError(FormatError::Kind::Io, "cannot open " + path);
    std::vector<std::uint8_t> data((std::istreambuf_iterator<char>(in)),
                                   std::istreambuf_iterator<char>());
    if (in.bad())
        throw FormatError(FormatError::Kind::Io, "read error on " + path);
    return data;
}

void write_file_atomic(std::string const & path, std::span<std::uint8_t const> data)
{
    std::string const tmp = path + ".tmp." + std::to_string(::getpid());
    int const fd = ::open(tmp.c_str(), O_WRONLY | O_CREAT | O_TRUNC, 0644);
    if (fd < 0)
        throw FormatError(FormatError::Kind::Io,
                          "cannot create " + tmp + ": " + std::strerror(errno));
    std::size_t done = 0;
    while (done < data.size()) {
        ssize_t const w = ::write(fd, data.data() + done, data.size() - done);
        if (w < 0) {
            if (errno == EINTR)
                continue;
            int const err = errno;
            ::close(fd);
            ::unlink(tmp.c_str());
            throw FormatError(FormatError::Kind::Io,
                              "write failed on " + tmp + ": " + std::strerror(err));
        }
        done += std::size_t(w);
    }
    ::fsync(fd);
    ::close(fd);
    if (std::rename(tmp.c_str(), path.c_str()) != 0) {
        int const err = errno;
        ::unlink(tmp.c_str());
        throw FormatError(FormatError::Kind::Io,
                          "cannot rename onto " + path + ": " + std::strerror(err));
    }
}

void write_text_atomic(std::string const & path, std::string_view text)
{
    write_file_atomic(path, std::span(reinterpret_cast<std::uint8_t const *>(text.data()),
                                      text.size()));
}

} // namespace sldlag
