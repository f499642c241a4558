#include <catch2/catch_amalgamated.hpp>

#include <cstdint>
#include <cstring>
#include <set>
#include <string>
#include <vector>

#include "fptab/keyed_stream.hpp"

using namespace fptab;

// ---------------------------------------------------------------------------
// Independent SHA-256 reference (FIPS 180-4), used only as a test oracle for
// the digest-based stream definition. Kept separate from the library path.
namespace oracle {

struct Sha256 {
    std::uint32_t h[8] = {0x6a09e667, 0xbb67ae85, 0x3c6ef372, 0xa54ff53a,
                          0x510e527f, 0x9b05688c, 0x1f83d9ab, 0x5be0cd19};
    std::vector<std::uint8_t> buf;

    static std::uint32_t rotr(std::uint32_t x, int n) { return (x >> n) | (x << (32 - n)); }

    void block(const std::uint8_t* p) {
        static const std::uint32_t K[64] = {
            0x428a2f98, 0x71374491, 0xb5c0fbcf, 0xe9b5dba5, 0x3956c25b, 0x59f111f1,
            0x923f82a4, 0xab1c5ed5, 0xd807aa98, 0x12835b01, 0x243185be, 0x550c7dc3,
            0x72be5d74, 0x80deb1fe, 0x9bdc06a7, 0xc19bf174, 0xe49b69c1, 0xefbe4786,
            0x0fc19dc6, 0x240ca1cc, 0x2de92c6f, 0x4a7484aa, 0x5cb0a9dc, 0x76f988da,
            0x983e5152, 0xa831c66d, 0xb00327c8, 0xbf597fc7, 0xc6e00bf3, 0xd5a79147,
            0x06ca6351, 0x14292967, 0x27b70a85, 0x2e1b2138, 0x4d2c6dfc, 0x53380d13,
            0x650a7354, 0x766a0abb, 0x81c2c92e, 0x92722c85, 0xa2bfe8a1, 0xa81a664b,
            0xc24b8b70, 0xc76c51a3, 0xd192e819, 0xd6990624, 0xf40e3585, 0x106aa070,
            0x19a4c116, 0x1e376c08, 0x2748774c, 0x34b0bcb5, 0x391c0cb3, 0x4ed8aa4a,
            0x5b9cca4f, 0x682e6ff3, 0x748f82ee, 0x78a5636f, 0x84c87814, 0x8cc70208,
            0x90befffa, 0xa4506ceb, 0xbef9a3f7, 0xc67178f2};
        std::uint32_t w[64];
        for (int i = 0; i < 16; ++i)
            w[i] = (std::uint32_t(p[4 * i]) << 24) | (std::uint32_t(p[4 * i + 1]) << 16) |
                   (std::uint32_t(p[4 * i + 2]) << 8) | p[4 * i + 3];
        for (int i = 16; i < 64; ++i) {
            std::uint32_t s0 = rotr(w[i - 15], 7) ^ rotr(w[i - 15], 18) ^ (w[i - 15] >> 3);
            std::uint32_t s1 = rotr(w[i - 2], 17) ^ rotr(w[i - 2], 19) ^ (w[i - 2] >> 10);
            w[i] = w[i - 16] + s0 + w[i - 7] + s1;
        }
        std::uint32_t a = h[0], b = h[1], c = h[2], d = h[3], e = h[4], f = h[5],
                      g = h[6], hh = h[7];
        for (int i = 0; i < 64; ++i) {
            std::uint32_t S1 = rotr(e, 6) ^ rotr(e, 11) ^ rotr(e, 25);
            std::uint32_t ch = (e & f) ^ (~e & g);
            std::uint32_t t1 = hh + S1 + ch + K[i] + w[i];
            std::uint32_t S0 = rotr(a, 2) ^ rotr(a, 13) ^ rotr(a, 22);
            std::uint32_t maj = (a & b) ^ (a & c) ^ (b & c);
            std::uint32_t t2 = S0 + maj;
            hh = g; g = f; f = e; e = d + t1;
            d = c; c = b; b = a; a = t1 + t2;
        }
        h[0] += a; h[1] += b; h[2] += c; h[3] += d;
        h[4] += e; h[5] += f; h[6] += g; h[7] += hh;
    }

    std::array<std::uint8_t, 32> digest(const std::vector<std::uint8_t>& msg) {
        std::vector<std::uint8_t> m = msg;
        std::uint64_t bits = std::uint64_t(m.size()) * 8;
        m.push_back(0x80);
        while (m.size() % 64 != 56) m.push_back(0);
        for (int i = 7; i >= 0; --i) m.push_back(std::uint8_t(bits >> (8 * i)));
        for (std::size_t off = 0; off < m.size(); off += 64) block(&m[off]);
        std::array<std::uint8_t, 32> out{};
        for (int i = 0; i < 8; ++i)
            for (int b = 0; b < 4; ++b)
                out[std::size_t(4 * i + b)] = std::uint8_t(h[i] >> (8 * (3 - b)));
        return out;
    }
};

std::array<std::uint8_t, 32> sha256(const std::vector<std::uint8_t>& msg) {
    Sha256 s;
    return s.digest(msg);
}

}  // namespace oracle

TEST_CASE("stream derivation is deterministic") {
    RecordStream a = derive_stream("secret", "row-42");
    RecordStream b = derive_stream("secret", "row-42");
    for (std::uint64_t i = 0; i < 16; ++i) CHECK(a.output(i) == b.output(i));
}

TEST_CASE("empty key rejected") {
    CHECK_THROWS_AS(derive_stream("", "1"), InvalidKey);
}

TEST_CASE("s0 matches the independent digest oracle") {
    // seed = SHA256("k" || 0x1F || "1"); s0 = BE u64 of SHA256(seed || be64(0))
    std::vector<std::uint8_t> seed_msg{'k', 0x1F, '1'};
    auto seed = oracle::sha256(seed_msg);
    std::vector<std::uint8_t> s0_msg(seed.begin(), seed.end());
    for (int i = 0; i < 8; ++i) s0_msg.push_back(0);
    auto d = oracle::sha256(s0_msg);
    std::uint64_t expected = 0;
    for (int i = 0; i < 8; ++i) expected = (expected << 8) | d[std::size_t(i)];

    CHECK(derive_stream("k", "1").output(0) == expected);
}

TEST_CASE("distinct PKs give distinct stream prefixes") {
    std::set<std::array<std::uint64_t, 4>> prefixes;
    for (int pk = 0; pk < 1000; ++pk) {
        RecordStream s = derive_stream("key", std::to_string(pk));
        prefixes.insert({s.output(0), s.output(1), s.output(2), s.output(3)});
    }
    CHECK(prefixes.size() == 1000);
}

TEST_CASE("selection probability") {
    CHECK(is_selected(0, 1.0));
    CHECK(is_selected(0xFFFFFFFFull, 1.0));  // gamma=1 selects everything
    CHECK_THROWS_AS(is_selected(0, 0.5), InvalidParameter);

    std::size_t hits = 0;
    const std::size_t n = 100000;
    for (std::size_t i = 0; i < n; ++i) {
        RecordStream s = derive_stream("sel", std::to_string(i));
        if (is_selected(s.output(0), 8.0)) ++hits;
    }
    double frac = double(hits) / double(n);
    CHECK(frac == Catch::Approx(0.125).margin(0.01));
}

TEST_CASE("mask bit parity and balance") {
    CHECK(mask_bit(4) == 0);
    CHECK(mask_bit(7) == 1);
    double sum = 0;
    const std::size_t n = 100000;
    for (std::size_t i = 0; i < n; ++i)
        sum += mask_bit(derive_stream("mask", std::to_string(i)).output(3));
    CHECK(sum / double(n) == Catch::Approx(0.5).margin(0.01));
}

TEST_CASE("s1 and s2 residues are uniform (chi-square)") {
    const std::size_t n = 100000;
    const std::size_t v = 15, L = 64;
    std::vector<std::size_t> c1(v, 0), c2(L, 0);
    for (std::size_t i = 0; i < n; ++i) {
        RecordStream s = derive_stream("unif", std::to_string(i));
        ++c1[s.output(1) % v];
        ++c2[s.output(2) % L];
    }
    auto chi2 = [n](const std::vector<std::size_t>& c) {
        double e = double(n) / double(c.size());
        double x = 0;
        for (std::size_t k : c) x += (double(k) - e) * (double(k) - e) / e;
        return x;
    };
    // generous upper tails: chi2_{14,0.999} ~ 36.1, chi2_{63,0.999} ~ 103.4
    CHECK(chi2(c1) < 40.0);
    CHECK(chi2(c2) < 110.0);
}

TEST_CASE("mask XOR round trip") {
    for (int x = 0; x < 2; ++x)
        for (int f = 0; f < 2; ++f) {
            int m = x ^ f;
            CHECK((m ^ x) == f);
            CHECK((f ^ x) == m);
        }
}

TEST_CASE("pk map is a pure function under a fixed key") {
    for (int trial = 0; trial < 100; ++trial) {
        std::string pk = "pk-" + std::to_string(trial * 7919);
        RecordStream a = derive_stream("fixed-key", pk);
        RecordStream b = derive_stream("fixed-key", pk);
        for (std::uint64_t i = 0; i < 4; ++i) CHECK(a.output(i) == b.output(i));
    }
}
