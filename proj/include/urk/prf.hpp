#pragma once

#include <cstdint>
#include <cstring>
#include <string_view>
#include <vector>

// Seeded, counter-mode pseudorandom function used everywhere randomness is
// needed. Every consumer derives its stream from (seed, domain tag, indices),
// so reconstruction is bit-identical across runs and platforms.

namespace urk {

// Final mixing step of 64-bit MurmurHash3; bijective, good avalanche.
constexpr uint64_t mix64(uint64_t x) {
    x ^= x >> 33;
    x *= 0xff51afd7ed558ccdULL;
    x ^= x >> 33;
    x *= 0xc4ceb9fe1a85ec53ULL;
    x ^= x >> 33;
    return x;
}

// FNV-1a over a byte string; used to fold variable-length inputs (messages,
// index vectors) into a word before mixing.
inline uint64_t fnv1a(const void* data, size_t len, uint64_t h = 0xcbf29ce484222325ULL) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (size_t i = 0; i < len; ++i) {
        h ^= p[i];
        h *= 0x100000001b3ULL;
    }
    return h;
}

inline uint64_t fnv1a(std::string_view s) { return fnv1a(s.data(), s.size()); }

// prf64(seed, tag, a, b, c): deterministic 64-bit output, domain-separated by
// a short ASCII tag and up to three word arguments.
inline uint64_t prf64(uint64_t seed, std::string_view tag, uint64_t a = 0, uint64_t b = 0,
                      uint64_t c = 0) {
    uint64_t h = mix64(seed ^ 0x9e3779b97f4a7c15ULL);
    h = mix64(h ^ fnv1a(tag));
    h = mix64(h ^ a);
    h = mix64(h ^ b);
    h = mix64(h ^ c);
    return h;
}

// A small counter-mode stream over prf64, for consumers that need a sequence
// of draws (shuffles, rejection sampling).
class PrfStream {
  public:
    PrfStream(uint64_t seed, std::string_view tag, uint64_t a = 0, uint64_t b = 0)
        : seed_(seed), key_(prf64(seed, tag, a, b)) {}

    uint64_t next() { return mix64(key_ ^ mix64(ctr_++ ^ seed_)); }

    // Uniform draw in [0, bound) by rejection; unbiased for any bound >= 1.
    uint64_t next_below(uint64_t bound) {
        // Largest multiple of bound that fits in 2^64.
        uint64_t limit = UINT64_MAX - UINT64_MAX % bound;
        uint64_t v;
        do {
            v = next();
        } while (v >= limit);
        return v % bound;
    }

  private:
    uint64_t seed_;
    uint64_t key_;
    uint64_t ctr_ = 0;
};

// Seeded Fisher-Yates permutation of [0, n); perm[i] is the image of i.
std::vector<uint32_t> seeded_permutation(uint64_t seed, std::string_view tag, uint32_t n);

} // namespace urk
