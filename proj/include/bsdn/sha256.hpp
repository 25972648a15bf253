#pragma once

#include <array>
#include <compare>
#include <cstdint>
#include <string>

#include "bsdn/bytes.hpp"

namespace bsdn {

// 32-byte SHA-256 output.
struct Digest {
    std::array<std::uint8_t, 32> bytes{};

    auto operator<=>(const Digest&) const = default;

    bool is_zero() const {
        for (auto b : bytes)
            if (b) return false;
        return true;
    }

    std::string hex() const { return to_hex(bytes.data(), bytes.size()); }
    // First 8 hex chars, used in trace logs.
    std::string prefix8() const { return to_hex(bytes.data(), 4); }
};

Digest sha256(const std::uint8_t* data, std::size_t n);
inline Digest sha256(const Bytes& b) { return sha256(b.data(), b.size()); }

}  // namespace bsdn
