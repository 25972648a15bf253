#pragma once

// Canonical binary encoding used for hashing, snapshots and state digests.
// All integers are fixed-width big-endian; sequences carry a u32 count;
// byte strings carry a u32 length; optionals carry a 1-byte presence flag.
// The same primitives are used on the read side so encode/decode stay in
// lockstep.

#include <bit>
#include <cstdint>
#include <cstring>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace bsdn {

using Bytes = std::vector<std::uint8_t>;

class ByteWriter {
public:
    const Bytes& data() const { return buf_; }
    Bytes take() { return std::move(buf_); }
    std::size_t size() const { return buf_.size(); }

    void u8(std::uint8_t v) { buf_.push_back(v); }
    void u16(std::uint16_t v) { be(v, 2); }
    void u32(std::uint32_t v) { be(v, 4); }
    void u64(std::uint64_t v) { be(v, 8); }
    void i64(std::int64_t v) { be(static_cast<std::uint64_t>(v), 8); }
    void f64(double v) { be(std::bit_cast<std::uint64_t>(v), 8); }

    void raw(const std::uint8_t* p, std::size_t n) { buf_.insert(buf_.end(), p, p + n); }

    void str(const std::string& s) {
        u32(static_cast<std::uint32_t>(s.size()));
        raw(reinterpret_cast<const std::uint8_t*>(s.data()), s.size());
    }

    void blob(const Bytes& b) {
        u32(static_cast<std::uint32_t>(b.size()));
        raw(b.data(), b.size());
    }

private:
    void be(std::uint64_t v, int nbytes) {
        for (int i = nbytes - 1; i >= 0; --i)
            buf_.push_back(static_cast<std::uint8_t>((v >> (8 * i)) & 0xff));
    }

    Bytes buf_;
};

// Thrown on truncated or malformed input.
struct DecodeError : std::runtime_error {
    explicit DecodeError(const std::string& what) : std::runtime_error(what) {}
};

class ByteReader {
public:
    ByteReader(const std::uint8_t* p, std::size_t n) : p_(p), end_(p + n) {}
    explicit ByteReader(const Bytes& b) : ByteReader(b.data(), b.size()) {}

    bool done() const { return p_ == end_; }
    std::size_t remaining() const { return static_cast<std::size_t>(end_ - p_); }

    std::uint8_t u8() { return static_cast<std::uint8_t>(be(1)); }

    // Presence/boolean byte. Strictly 0 or 1 so every encoding has exactly
    // one byte representation; anything else is a tampered or foreign blob.
    bool flag() {
        std::uint8_t v = u8();
        if (v > 1) throw DecodeError("non-canonical flag byte");
        return v != 0;
    }

    std::uint16_t u16() { return static_cast<std::uint16_t>(be(2)); }
    std::uint32_t u32() { return static_cast<std::uint32_t>(be(4)); }
    std::uint64_t u64() { return be(8); }
    std::int64_t i64() { return static_cast<std::int64_t>(be(8)); }
    double f64() { return std::bit_cast<double>(be(8)); }

    void raw(std::uint8_t* out, std::size_t n) {
        need(n);
        std::memcpy(out, p_, n);
        p_ += n;
    }

    std::string str() {
        std::uint32_t n = u32();
        need(n);
        std::string s(reinterpret_cast<const char*>(p_), n);
        p_ += n;
        return s;
    }

    Bytes blob() {
        std::uint32_t n = u32();
        need(n);
        Bytes b(p_, p_ + n);
        p_ += n;
        return b;
    }

private:
    void need(std::size_t n) const {
        if (remaining() < n) throw DecodeError("truncated input");
    }

    std::uint64_t be(int nbytes) {
        need(static_cast<std::size_t>(nbytes));
        std::uint64_t v = 0;
        for (int i = 0; i < nbytes; ++i) v = (v << 8) | *p_++;
        return v;
    }

    const std::uint8_t* p_;
    const std::uint8_t* end_;
};

std::string to_hex(const std::uint8_t* p, std::size_t n);

}  // namespace bsdn
