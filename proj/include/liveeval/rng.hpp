#pragma once
// Deterministic RNG stack. Simulated worlds must reproduce bit-exactly from a
// documented 64-bit seed, across platforms and regardless of evaluation order,
// so nothing here depends on std::mt19937 or libstdc++ distribution internals.
//
//   generator   PCG32 (pcg32 of the PCG family: 64-bit LCG state, XSH-RR output)
//   substreams  (purpose string, index) selects an independent (state, stream)
//               pair via FNV-1a + SplitMix64 mixing of the master seed
//   normals     Box-Muller on 53-bit uniforms, second deviate cached
//   shuffle     Fisher-Yates with rejection-sampled bounded draws
#include <cstdint>
#include <cmath>
#include <string_view>
#include <utility>
#include <vector>

namespace liveeval {

class Pcg32 {
public:
    // Matches pcg32_srandom of the reference implementation: with
    // seed=42, initseq=54 the first outputs are 0xa15c02b7, 0x7b47f409, ...
    explicit Pcg32(uint64_t seed, uint64_t initseq = 0) {
        state_ = 0u;
        inc_ = (initseq << 1u) | 1u;
        next_u32();
        state_ += seed;
        next_u32();
    }

    uint32_t next_u32() {
        uint64_t old = state_;
        state_ = old * 6364136223846793005ULL + inc_;
        uint32_t xorshifted = static_cast<uint32_t>(((old >> 18u) ^ old) >> 27u);
        uint32_t rot = static_cast<uint32_t>(old >> 59u);
        return (xorshifted >> rot) | (xorshifted << ((32u - rot) & 31u));
    }

    uint64_t next_u64() {
        uint64_t hi = next_u32();
        return (hi << 32) | next_u32();
    }

    // Uniform in [0,1) with 53 random bits.
    double next_double() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    // Unbiased integer in [0, bound), bound >= 1; PCG's rejection scheme.
    uint32_t next_below(uint32_t bound) {
        uint32_t threshold = (0u - bound) % bound;
        for (;;) {
            uint32_t r = next_u32();
            if (r >= threshold) return r % bound;
        }
    }

    // Standard normal deviate; consumes two uniforms every other call.
    double next_normal() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u1 = 1.0 - next_double();  // (0, 1]: keeps the log finite
        double u2 = next_double();
        double r = std::sqrt(-2.0 * std::log(u1));
        double a = 6.28318530717958647692528676655900577 * u2;
        spare_ = r * std::sin(a);
        have_spare_ = true;
        return r * std::cos(a);
    }

    template <class T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            std::size_t j = next_below(static_cast<uint32_t>(i));
            std::swap(v[i - 1], v[j]);
        }
    }

private:
    uint64_t state_ = 0;
    uint64_t inc_ = 1;
    double spare_ = 0.0;
    bool have_spare_ = false;
};

inline uint64_t splitmix64(uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

inline uint64_t fnv1a64(std::string_view s) {
    uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

// Independent substream for (purpose, index) under one master seed. Both the
// PCG state and the stream selector depend on all three inputs, so substreams
// never alias sections of each other's sequences.
inline Pcg32 substream(uint64_t seed, std::string_view purpose, uint64_t index = 0) {
    uint64_t x = splitmix64(seed ^ fnv1a64(purpose));
    x = splitmix64(x ^ index);
    uint64_t s0 = splitmix64(x);
    uint64_t s1 = splitmix64(x + 0x9e3779b97f4a7c15ULL);
    return Pcg32(s0, s1);
}

}  // namespace liveeval
