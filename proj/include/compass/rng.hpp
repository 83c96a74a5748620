#pragma once

#include <cstdint>
#include <random>

namespace compass {

inline uint64_t splitmix64(uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

// Engine plus draw helpers that do not depend on the standard library's
// distribution implementations, so streams are reproducible across toolchains.
class Rng {
public:
    explicit Rng(uint64_t seed) : engine_(splitmix64(seed)) {}

    // Independent stream for (seed, a, b), e.g. (seed, generation, slot).
    static Rng stream(uint64_t seed, uint64_t a, uint64_t b) {
        return Rng(splitmix64(seed ^ splitmix64(a ^ splitmix64(b + 0x632be59bd9b4e019ULL))));
    }

    uint64_t next() { return engine_(); }

    // Uniform in [0, n), n > 0; rejection sampling removes modulo bias.
    uint64_t index(uint64_t n) {
        const uint64_t limit = UINT64_MAX - UINT64_MAX % n;
        uint64_t x;
        do {
            x = engine_();
        } while (x >= limit);
        return x % n;
    }

    double uniform01() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

private:
    std::mt19937_64 engine_;
};

}  // namespace compass
