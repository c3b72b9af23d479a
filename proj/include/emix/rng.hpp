// Seeded RNG with implementation-pinned distributions so runs replay
// identically across compilers (std:: distributions are not portable).
#pragma once

#include <cstdint>
#include <random>

namespace emix {

inline uint64_t splitmix64(uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

// Mix a stream tag into a master seed.
inline uint64_t derive_seed(uint64_t master, uint64_t stream) {
    return splitmix64(master ^ splitmix64(stream));
}

class Rng {
public:
    explicit Rng(uint64_t seed) : eng_(splitmix64(seed)) {}

    uint64_t next() { return eng_(); }

    // Uniform in [0, n). Modulo bias is irrelevant at our n.
    uint64_t below(uint64_t n) { return n ? eng_() % n : 0; }

    bool bernoulli(double p) {
        if (p <= 0.0) return false;
        if (p >= 1.0) return true;
        return double(eng_() >> 11) * 0x1.0p-53 < p;
    }

private:
    std::mt19937_64 eng_;
};

}  // namespace emix
