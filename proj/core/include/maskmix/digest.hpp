#pragma once

#include <cstdint>
#include <cstring>
#include <string>
#include <string_view>
#include <vector>

namespace maskmix {

// FNV-1a 64-bit running digest over a canonical byte stream.
// Doubles enter via their IEEE-754 bit pattern, integers as 8 little-endian
// bytes, strings as length then bytes. Two digests agree only when every
// ingested value is bitwise identical, which is what the determinism
// checks rely on.
class Digest {
public:
    void bytes(const void* p, std::size_t n) {
        const auto* s = static_cast<const unsigned char*>(p);
        for (std::size_t i = 0; i < n; ++i) {
            state_ ^= s[i];
            state_ *= 1099511628211ull;
        }
    }

    void u64(std::uint64_t x) {
        unsigned char buf[8];
        for (int i = 0; i < 8; ++i) buf[i] = static_cast<unsigned char>(x >> (8 * i));
        bytes(buf, sizeof buf);
    }

    void f64(double x) {
        std::uint64_t bits;
        std::memcpy(&bits, &x, sizeof bits);
        u64(bits);
    }

    void str(std::string_view s) {
        u64(s.size());
        bytes(s.data(), s.size());
    }

    void f64s(const std::vector<double>& xs) {
        u64(xs.size());
        for (double x : xs) f64(x);
    }

    std::uint64_t value() const { return state_; }

private:
    std::uint64_t state_ = 14695981039346656037ull;
};

// Fixed-width lowercase hex, the rendering used inside artifact files.
inline std::string to_hex(std::uint64_t x) {
    const char* digits = "0123456789abcdef";
    std::string out(16, '0');
    for (int i = 15; i >= 0; --i) {
        out[static_cast<std::size_t>(i)] = digits[x & 0xF];
        x >>= 4;
    }
    return out;
}

}  // namespace maskmix
