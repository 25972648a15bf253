#include "bsdn/sha256.hpp"

#include <openssl/evp.h>

#include <cstdio>
#include <cstdlib>
#include <stdexcept>

#include "bsdn/common.hpp"

namespace bsdn {

Digest sha256(const std::uint8_t* data, std::size_t n) {
    Digest d;
    unsigned int outlen = 0;
    if (EVP_Digest(data, n, d.bytes.data(), &outlen, EVP_sha256(), nullptr) != 1 ||
        outlen != d.bytes.size()) {
        throw std::runtime_error("sha256: EVP_Digest failed");
    }
    return d;
}

std::string to_hex(const std::uint8_t* p, std::size_t n) {
    static const char* digits = "0123456789abcdef";
    std::string s;
    s.reserve(2 * n);
    for (std::size_t i = 0; i < n; ++i) {
        s.push_back(digits[p[i] >> 4]);
        s.push_back(digits[p[i] & 0xf]);
    }
    return s;
}

LogLevel log_level() {
    static LogLevel lvl = [] {
        const char* e = std::getenv("BSDN_LOG");
        if (!e) return LogLevel::error;
        std::string s(e);
        if (s == "debug") return LogLevel::debug;
        if (s == "info") return LogLevel::info;
        return LogLevel::error;
    }();
    return lvl;
}

void log_line(LogLevel lvl, const std::string& msg) {
    if (static_cast<int>(lvl) <= static_cast<int>(log_level()))
        std::fprintf(stderr, "%s\n", msg.c_str());
}

}  // namespace bsdn
