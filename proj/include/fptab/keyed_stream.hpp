#pragma once

#include <array>
#include <cstdint>
#include <cstring>
#include <string>
#include <string_view>

#include <openssl/evp.h>

#include "fptab/errors.hpp"

namespace fptab {

using Digest = std::array<std::uint8_t, 32>;

inline Digest sha256(const std::uint8_t* data, std::size_t len) {
    Digest out{};
    unsigned int out_len = 0;
    EVP_Digest(data, len, out.data(), &out_len, EVP_sha256(), nullptr);
    return out;
}

inline Digest sha256(std::string_view s) {
    return sha256(reinterpret_cast<const std::uint8_t*>(s.data()), s.size());
}

/// Deterministic per-record pseudo-random stream.
///
/// seed = SHA-256(key_bytes || 0x1F || utf8(pk));
/// output(i) = big-endian u64 from the first 8 bytes of SHA-256(seed || be64(i)).
class RecordStream {
public:
    explicit RecordStream(Digest seed) : seed_(seed) {}

    std::uint64_t output(std::uint64_t i) const {
        std::uint8_t buf[40];
        std::memcpy(buf, seed_.data(), 32);
        for (int b = 0; b < 8; ++b)
            buf[32 + b] = static_cast<std::uint8_t>(i >> (8 * (7 - b)));
        Digest d = sha256(buf, sizeof buf);
        std::uint64_t v = 0;
        for (int b = 0; b < 8; ++b) v = (v << 8) | d[static_cast<std::size_t>(b)];
        return v;
    }

    const Digest& seed() const { return seed_; }

private:
    Digest seed_;
};

inline RecordStream derive_stream(std::string_view key, std::string_view pk) {
    if (key.empty()) throw InvalidKey("secret key must be non-empty");
    std::string buf;
    buf.reserve(key.size() + 1 + pk.size());
    buf.append(key);
    buf.push_back('\x1f');
    buf.append(pk);
    return RecordStream(sha256(buf));
}

/// Record selection: (s0 mod 2^32)/2^32 < 1/gamma.
inline bool is_selected(std::uint64_t s0, double gamma) {
    if (gamma < 1.0) throw InvalidParameter("gamma must be >= 1");
    double frac = static_cast<double>(s0 & 0xFFFFFFFFull) / 4294967296.0;
    return frac < 1.0 / gamma;
}

/// Mask bit: 0 iff s3 is even.
inline int mask_bit(std::uint64_t s3) {
    return static_cast<int>(s3 & 1u);
}

}  // namespace fptab
