#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <utility>

namespace mve {

// splitmix64 step. Used both as a standalone mixer for seed derivation and
// to spread user-provided seeds before feeding mt19937_64.
inline std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

// Deterministic sub-seed derivation: mixes a base seed with up to three
// stream coordinates (e.g. run index, member index, purpose tag) so that
// independent streams never collide.
inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t a,
                                 std::uint64_t b = 0, std::uint64_t c = 0) {
    std::uint64_t s = base;
    s ^= splitmix64(a ^= 0x6a09e667f3bcc909ULL);
    std::uint64_t t = s + 0x3c6ef372fe94f82bULL * (b + 1);
    s ^= splitmix64(t);
    std::uint64_t u = s + 0xa54ff53a5f1d36f1ULL * (c + 1);
    s ^= splitmix64(u);
    return splitmix64(s);
}

// Seeded RNG with portable bounded/real draws. std::uniform_*_distribution
// is implementation-defined, so draws are done by hand to keep outputs
// identical across standard libraries.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(mix(seed)) {}

    std::uint64_t next_u64() { return engine_(); }

    // uniform in [0, n), n >= 1; multiply-shift reduction
    std::uint64_t bounded(std::uint64_t n) {
        return static_cast<std::uint64_t>(
            (static_cast<unsigned __int128>(next_u64()) * n) >> 64);
    }

    // uniform in [0, 1) with 53 random bits
    double real01() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    // uniform in [-amplitude, amplitude]
    double symmetric(double amplitude) { return (2.0 * real01() - 1.0) * amplitude; }

    template <typename T>
    void shuffle(std::span<T> items) {
        // Fisher-Yates with explicit bounded draws
        for (std::size_t i = items.size(); i > 1; --i) {
            std::size_t j = static_cast<std::size_t>(bounded(i));
            std::swap(items[i - 1], items[j]);
        }
    }

private:
    static std::uint64_t mix(std::uint64_t seed) {
        std::uint64_t s = seed;
        return splitmix64(s);
    }
    std::mt19937_64 engine_;
};

} // namespace mve
