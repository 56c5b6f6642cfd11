#pragma once

/* Little-endian byte buffers and whole-file I/O shared by the on-disk
 * formats. Files are always written atomically: the bytes go to a sibling
 * temporary file which is then renamed over the destination. */

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "sldlag/errors.hpp"
#include "sldlag/modring.hpp"

namespace sldlag {

class ByteWriter {
  public:
    void u8(std::uint8_t v) { buf_.push_back(v); }
    void u16(std::uint16_t v) { put_le(v, 2); }
    void u32(std::uint32_t v) { put_le(v, 4); }
    void u64(std::uint64_t v) { put_le(v, 8); }
    void i32(std::int32_t v) { put_le(std::uint32_t(v), 4); }
    void bytes(std::span<std::uint8_t const> b) { buf_.insert(buf_.end(), b.begin(), b.end()); }
    void magic(std::string_view m) { buf_.insert(buf_.end(), m.begin(), m.end()); }
    void residue(PrimeModulus const & p, Residue const & r);
    /* u16 byte count followed by ell, big-endian */
    void modulus(PrimeModulus const & p);

    std::vector<std::uint8_t> const & data() const { return buf_; }
    std::vector<std::uint8_t> take() { return std::move(buf_); }

  private:
    void put_le(std::uint64_t v, int n)
    {
        for (int i = 0; i < n; ++i)
            buf_.push_back(std::uint8_t(v >> (8 * i)));
    }
    std::vector<std::uint8_t> buf_;
};

class ByteReader {
  public:
    ByteReader(std::span<std::uint8_t const> data, std::string what)
        : data_(data), what_(std::move(what))
    {
    }

    std::uint8_t u8() { return std::uint8_t(get_le(1)); }
    std::uint16_t u16() { return std::uint16_t(get_le(2)); }
    std::uint32_t u32() { return std::uint32_t(get_le(4)); }
    std::uint64_t u64() { return get_le(8); }
    std::int32_t i32() { return std::int32_t(std::uint32_t(get_le(4))); }
    std::span<std::uint8_t const> bytes(std::size_t n);
    /* Throws FormatError(BadMagic) on mismatch. */
    void expect_magic(std::string_view m);
    /* Throws FormatError(BadVersion) unless the next u32 equals v. */
    void expect_version(std::uint32_t v);
    /* Non-canonical residues are an invariant violation. */
    Residue residue(PrimeModulus const & p);
    PrimeModulus modulus();

    std::size_t remaining() const { return data_.size() - pos_; }
    /* Trailing garbage counts as an invariant violation. */
    void expect_end();
    [[noreturn]] void fail(FormatError::Kind kind, std::string const & msg) const;

  private:
    std::uint64_t get_le(int n);
    std::span<std::uint8_t const> data_;
    std::size_t pos_ = 0;
    std::string what_;
};

/* 64-bit FNV-1a, used as a cheap content fingerprint. */
std::uint64_t fnv1a64(std::span<std::uint8_t const> data);

std::vector<std::uint8_t> read_file(std::string const & path);
void write_file_atomic(std::string const & path, std::span<std::uint8_t const> data);
void write_text_atomic(std::string const & path, std::string_view text);

} // namespace sldlag
